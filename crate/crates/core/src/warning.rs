use std::fmt;

/// Non-fatal conditions surfaced alongside a result.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Input duration lies outside the 3 s to 10 s range the metric is tuned for.
    DurationOutsideRecommended { signal: &'static str, seconds: f64 },
    /// One of the signals carries no energy, so global alignment fell back to lag 0.
    DegenerateAlignment,
    /// All training labels were equal; a constant predictor was produced.
    DegenerateLabels { value: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DurationOutsideRecommended { signal, seconds } => write!(
                f,
                "{signal} signal is {seconds:.2} s long; 3 s to 10 s of active audio is recommended"
            ),
            Warning::DegenerateAlignment => {
                f.write_str("a signal has zero energy; global alignment skipped (lag 0)")
            }
            Warning::DegenerateLabels { value } => {
                write!(
                    f,
                    "all training labels equal {value}; model is a constant predictor"
                )
            }
        }
    }
}
