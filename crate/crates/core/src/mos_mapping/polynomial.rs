use super::{clamp_mos, MappingError};

/// Least-squares cubic through the default speech anchors
/// `(0.3, 1.0) (0.6, 2.0) (0.8, 3.0) (0.9, 4.0) (1.0, 4.75)`, ascending powers.
pub const DEFAULT_SPEECH_COEFFICIENTS: [f64; 4] = [
    0.582_946_156_625_884_1,
    0.934_547_777_605_699_2,
    0.823_395_797_842_135_2,
    2.448_892_674_616_695,
];

pub const DEFAULT_SPEECH_ANCHORS: [(f64, f64); 5] =
    [(0.3, 1.0), (0.6, 2.0), (0.8, 3.0), (0.9, 4.0), (1.0, 4.75)];

const MONOTONE_STEP: f64 = 1e-3;

/// Polynomial NSIM-to-MOS mapping, clamped to `[1, 5]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMapping {
    coefficients: Vec<f64>,
}

impl PolynomialMapping {
    /// Rejects coefficient sets that are not nondecreasing on `[0, 1]`
    /// (checked on a 1e-3 grid after clamping).
    pub fn new(coefficients: Vec<f64>) -> Result<Self, MappingError> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(MappingError::InvalidPolynomial(
                "coefficients must be finite".into(),
            ));
        }
        let mapping = Self { coefficients };
        let steps = (1.0 / MONOTONE_STEP).round() as usize;
        let mut prev = mapping.mos(0.0);
        for i in 1..=steps {
            let v = mapping.mos(i as f64 * MONOTONE_STEP);
            if v < prev {
                return Err(MappingError::InvalidPolynomial(format!(
                    "mapping decreases near NSIM {:.3}",
                    i as f64 * MONOTONE_STEP
                )));
            }
            prev = v;
        }
        Ok(mapping)
    }

    pub fn default_speech() -> Self {
        Self::new(DEFAULT_SPEECH_COEFFICIENTS.to_vec()).expect("default mapping is monotone")
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Unclamped polynomial value (Horner).
    pub fn evaluate(&self, nsim: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * nsim + c)
    }

    pub fn mos(&self, overall_nsim: f64) -> f64 {
        clamp_mos(self.evaluate(overall_nsim))
    }
}

impl Default for PolynomialMapping {
    fn default() -> Self {
        Self::default_speech()
    }
}

/// Least-squares polynomial fit of `degree` through `points` (normal
/// equations, Gaussian elimination with partial pivoting).
pub fn fit_polynomial(points: &[(f64, f64)], degree: usize) -> Option<Vec<f64>> {
    let n = degree + 1;
    if points.len() < n {
        return None;
    }
    let mut a = vec![vec![0.0; n + 1]; n];
    for &(x, y) in points {
        let powers: Vec<f64> = (0..n).map(|k| x.powi(k as i32)).collect();
        for r in 0..n {
            for c in 0..n {
                a[r][c] += powers[r] * powers[c];
            }
            a[r][n] += powers[r] * y;
        }
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (above, below) = a.split_at_mut(row);
            for (x, p) in below[0][col..=n].iter_mut().zip(&above[col][col..=n]) {
                *x -= f * p;
            }
        }
    }
    let mut coef = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * coef[k]).sum();
        coef[row] = (a[row][n] - tail) / a[row][row];
    }
    Some(coef)
}
