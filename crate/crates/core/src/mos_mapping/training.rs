//! Grid-searched epsilon-SVR training with k-fold cross validation.
//!
//! Folds are assigned round-robin in input order (`row % folds`), so row
//! order matters for reproducibility. Grid points are evaluated in parallel;
//! the selection itself walks the grid in a fixed order.

use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;

use super::svr::{rbf, solve_epsilon_svr};
use super::{clamp_mos, MappingError, SvrModel, MOS_MAX, MOS_MIN};
use crate::Warning;

pub const DEFAULT_EPSILON: f64 = 0.2;
const MIN_ROWS: usize = 4;

/// One `reference,degraded,mos` row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRow {
    pub reference: PathBuf,
    pub degraded: PathBuf,
    pub mos: f64,
}

/// Subjective scores for reference/degraded pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingDataset {
    pub rows: Vec<TrainingRow>,
}

impl TrainingDataset {
    /// Reads a CSV with header `reference,degraded,mos`. Relative paths are
    /// resolved against the CSV's directory.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, MappingError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| MappingError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_reader(file, base)
    }

    pub fn from_reader(reader: impl std::io::Read, base_dir: &Path) -> Result<Self, MappingError> {
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = csv
            .headers()
            .map_err(|e| MappingError::MalformedDataset(e.to_string()))?
            .clone();
        let expected = ["reference", "degraded", "mos"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(MappingError::MalformedDataset(format!(
                "header must be `reference,degraded,mos`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let row_no = i + 1;
            let record =
                record.map_err(|e| MappingError::MalformedDataset(format!("row {row_no}: {e}")))?;
            let (reference, degraded, mos) = (&record[0], &record[1], &record[2]);
            if reference.is_empty() || degraded.is_empty() {
                return Err(MappingError::MalformedDataset(format!(
                    "row {row_no}: empty path"
                )));
            }
            let mos: f64 = mos.parse().map_err(|_| {
                MappingError::MalformedDataset(format!("row {row_no}: MOS `{mos}` is not a number"))
            })?;
            if !(MOS_MIN..=MOS_MAX).contains(&mos) {
                return Err(MappingError::LabelOutOfRange {
                    row: row_no,
                    value: mos,
                });
            }
            rows.push(TrainingRow {
                reference: base_dir.join(reference),
                degraded: base_dir.join(degraded),
                mos,
            });
        }
        Ok(Self { rows })
    }
}

/// Hyper-parameter grid and solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub folds: usize,
    pub epsilon: f64,
    /// SMO stopping tolerance on the KKT violation.
    pub tolerance: f64,
    /// Accept any grid point within this RMSE of the best, preferring
    /// smaller C then smaller gamma. Zero selects the strict minimum.
    pub relax_rmse: f64,
    pub conformance_tag: String,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            c_values: (-3..=7).map(|e| 2f64.powi(e)).collect(),
            gamma_values: (-7..=3).map(|e| 2f64.powi(e)).collect(),
            folds: 4,
            epsilon: DEFAULT_EPSILON,
            tolerance: 1e-3,
            relax_rmse: 0.0,
            conformance_tag: "user".into(),
        }
    }
}

/// Cross-validation RMSE for every grid point, `rmse[c_index][gamma_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub rmse: Vec<Vec<f64>>,
    pub best_c: f64,
    pub best_gamma: f64,
    pub best_rmse: f64,
}

impl CvReport {
    /// Human-readable RMSE table, one row per C.
    pub fn table(&self) -> String {
        let mut out = format!("{:>10}", "C \\ gamma");
        for g in &self.gamma_values {
            out.push_str(&format!(" {g:>9.4}"));
        }
        out.push('\n');
        for (c, row) in self.c_values.iter().zip(&self.rmse) {
            out.push_str(&format!("{c:>10.4}"));
            for v in row {
                out.push_str(&format!(" {v:>9.5}"));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "best: C={} gamma={} cv_rmse={:.5}\n",
            self.best_c, self.best_gamma, self.best_rmse
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: SvrModel,
    /// Absent when the labels were degenerate and no search was run.
    pub report: Option<CvReport>,
    pub warnings: Vec<Warning>,
}

fn standardization(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let dim = rows[0].len();
    let n = rows.len() as f64;
    let means: Vec<f64> = (0..dim)
        .map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n)
        .collect();
    let scales = (0..dim)
        .map(|d| {
            let var = rows.iter().map(|r| (r[d] - means[d]).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (means, scales)
}

fn fit(rows: &[&[f64]], labels: &[f64], c: f64, gamma: f64, cfg: &TrainingConfig) -> SvrModel {
    let (means, scales) = standardization(rows);
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&means)
                .zip(&scales)
                .map(|((x, m), s)| (x - m) / s)
                .collect()
        })
        .collect();
    let kernel: Vec<Vec<f64>> = z
        .iter()
        .map(|a| z.iter().map(|b| rbf(a, b, gamma)).collect())
        .collect();
    let sol = solve_epsilon_svr(&kernel, labels, c, cfg.epsilon, cfg.tolerance);

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (zi, coef) in z.into_iter().zip(sol.coefs) {
        if coef != 0.0 {
            support_vectors.push(zi);
            dual_coefs.push(coef);
        }
    }
    SvrModel {
        support_vectors,
        dual_coefs,
        bias: sol.bias,
        gamma,
        feature_means: means,
        feature_scales: scales,
        conformance_tag: cfg.conformance_tag.clone(),
    }
}

fn cv_rmse(features: &[Vec<f64>], labels: &[f64], c: f64, gamma: f64, cfg: &TrainingConfig) -> f64 {
    let mut sq_err = 0.0;
    for fold in 0..cfg.folds {
        let mut train_x: Vec<&[f64]> = Vec::new();
        let mut train_y = Vec::new();
        for (i, (x, &y)) in features.iter().zip(labels).enumerate() {
            if i % cfg.folds != fold {
                train_x.push(x);
                train_y.push(y);
            }
        }
        let model = fit(&train_x, &train_y, c, gamma, cfg);
        for (i, (x, &y)) in features.iter().zip(labels).enumerate() {
            if i % cfg.folds == fold {
                let pred = clamp_mos(model.predict_raw(x).expect("dimensions checked"));
                sq_err += (pred - y).powi(2);
            }
        }
    }
    (sq_err / labels.len() as f64).sqrt()
}

/// Trains an RBF epsilon-SVR on feature vectors (per-band NSIM) and MOS labels.
///
/// Every `(C, gamma)` pair is scored by k-fold CV RMSE on clamped
/// predictions; the lowest RMSE wins, ties going to smaller C and then
/// smaller gamma. The final model is refit on all rows.
pub fn train_svr(
    features: &[Vec<f64>],
    labels: &[f64],
    cfg: &TrainingConfig,
) -> Result<TrainedModel, MappingError> {
    if features.len() != labels.len() {
        return Err(MappingError::MalformedDataset(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if cfg.folds < 2 {
        return Err(MappingError::InvalidConfig("need at least 2 folds".into()));
    }
    if cfg.c_values.is_empty() || cfg.gamma_values.is_empty() {
        return Err(MappingError::InvalidConfig("empty parameter grid".into()));
    }
    if cfg
        .c_values
        .iter()
        .chain(&cfg.gamma_values)
        .any(|v| !(*v > 0.0 && v.is_finite()))
    {
        return Err(MappingError::InvalidConfig(
            "C and gamma must be positive".into(),
        ));
    }
    let required = MIN_ROWS.max(cfg.folds);
    if labels.len() < required {
        return Err(MappingError::InsufficientData {
            required,
            actual: labels.len(),
        });
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(MappingError::MalformedDataset(
            "empty feature vectors".into(),
        ));
    }
    if let Some(bad) = features.iter().find(|f| f.len() != dim) {
        return Err(MappingError::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    for (i, &y) in labels.iter().enumerate() {
        if !(MOS_MIN..=MOS_MAX).contains(&y) {
            return Err(MappingError::LabelOutOfRange {
                row: i + 1,
                value: y,
            });
        }
    }

    if labels.iter().all(|&y| y == labels[0]) {
        let w = Warning::DegenerateLabels { value: labels[0] };
        warn!("{w}");
        return Ok(TrainedModel {
            model: SvrModel::constant(labels[0], dim, cfg.conformance_tag.clone()),
            report: None,
            warnings: vec![w],
        });
    }

    let grid: Vec<(usize, usize)> = (0..cfg.c_values.len())
        .flat_map(|ci| (0..cfg.gamma_values.len()).map(move |gi| (ci, gi)))
        .collect();
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&(ci, gi)| {
            cv_rmse(
                features,
                labels,
                cfg.c_values[ci],
                cfg.gamma_values[gi],
                cfg,
            )
        })
        .collect();

    let mut rmse = vec![vec![0.0; cfg.gamma_values.len()]; cfg.c_values.len()];
    for (&(ci, gi), &s) in grid.iter().zip(&scores) {
        rmse[ci][gi] = s;
    }

    // Walk C ascending, then gamma ascending.
    let mut order = grid.clone();
    order.sort_by(|a, b| {
        cfg.c_values[a.0]
            .total_cmp(&cfg.c_values[b.0])
            .then(cfg.gamma_values[a.1].total_cmp(&cfg.gamma_values[b.1]))
    });
    let min_rmse = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let &(best_ci, best_gi) = order
        .iter()
        .find(|&&(ci, gi)| rmse[ci][gi] <= min_rmse + cfg.relax_rmse)
        .expect("grid is non-empty");

    let (best_c, best_gamma) = (cfg.c_values[best_ci], cfg.gamma_values[best_gi]);
    let all: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let model = fit(&all, labels, best_c, best_gamma, cfg);

    Ok(TrainedModel {
        model,
        report: Some(CvReport {
            c_values: cfg.c_values.clone(),
            gamma_values: cfg.gamma_values.clone(),
            best_rmse: rmse[best_ci][best_gi],
            rmse,
            best_c,
            best_gamma,
        }),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let features: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                vec![0.5 + 0.5 * t, 0.4 + 0.6 * t * t, 0.6 + 0.4 * t.sqrt()]
            })
            .collect();
        let labels = features
            .iter()
            .map(|f| clamp_mos(1.0 + 4.0 * f.iter().sum::<f64>() / 3.0))
            .collect();
        (features, labels)
    }

    fn small_grid() -> TrainingConfig {
        TrainingConfig {
            c_values: vec![1.0, 8.0, 64.0],
            gamma_values: vec![0.125, 0.5, 2.0],
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn default_grid_is_powers_of_two() {
        let cfg = TrainingConfig::default();
        assert_eq!(cfg.c_values.len(), 11);
        assert_eq!(cfg.c_values[0], 0.125);
        assert_eq!(cfg.c_values[10], 128.0);
        assert_eq!(cfg.gamma_values[0], 1.0 / 128.0);
        assert_eq!(cfg.gamma_values[10], 8.0);
        assert_eq!(cfg.folds, 4);
        assert_eq!(cfg.epsilon, 0.2);
    }

    #[test]
    fn fits_smooth_target() {
        let (x, y) = synthetic(40);
        let trained = train_svr(&x, &y, &small_grid()).unwrap();
        let report = trained.report.unwrap();
        assert!(report.best_rmse < 0.2, "{}", report.table());
        assert_eq!(report.rmse.len(), 3);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = synthetic(24);
        let a = train_svr(&x, &y, &small_grid()).unwrap();
        let b = train_svr(&x, &y, &small_grid()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equal_labels_give_constant_model() {
        let (x, _) = synthetic(8);
        let y = vec![3.0; 8];
        let trained = train_svr(&x, &y, &small_grid()).unwrap();
        assert!(trained.report.is_none());
        assert_eq!(
            trained.warnings,
            vec![Warning::DegenerateLabels { value: 3.0 }]
        );
        assert_eq!(trained.model.predict(&x[3]).unwrap(), 3.0);
    }

    #[test]
    fn too_few_rows() {
        let (x, y) = synthetic(3);
        assert!(matches!(
            train_svr(&x, &y, &small_grid()),
            Err(MappingError::InsufficientData {
                required: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn out_of_range_labels() {
        let (x, mut y) = synthetic(8);
        y[5] = 6.2;
        assert!(matches!(
            train_svr(&x, &y, &small_grid()),
            Err(MappingError::LabelOutOfRange { row: 6, .. })
        ));
    }

    #[test]
    fn ties_prefer_small_c_then_gamma() {
        // Constant-per-fold behaviour: with a huge tube every grid point
        // predicts the bias only, so all RMSEs tie.
        let (x, y) = synthetic(12);
        let cfg = TrainingConfig {
            epsilon: 10.0,
            ..small_grid()
        };
        let trained = train_svr(&x, &y, &cfg).unwrap();
        let report = trained.report.unwrap();
        assert_eq!(report.best_c, 1.0);
        assert_eq!(report.best_gamma, 0.125);
    }

    #[test]
    fn csv_parsing() {
        let text = "reference,degraded,mos\nr1.wav,d1.wav,4.5\n\"a,b.wav\",d2.wav,1\n";
        let ds = TrainingDataset::from_reader(text.as_bytes(), Path::new("/data")).unwrap();
        assert_eq!(ds.rows.len(), 2);
        assert_eq!(ds.rows[1].reference, PathBuf::from("/data/a,b.wav"));
        assert_eq!(ds.rows[0].mos, 4.5);

        let bad = "reference,degraded,mos\nr.wav,d.wav,6.2\n";
        assert!(matches!(
            TrainingDataset::from_reader(bad.as_bytes(), Path::new("")),
            Err(MappingError::LabelOutOfRange { row: 1, .. })
        ));
        let bad_header = "ref,deg,score\n";
        assert!(TrainingDataset::from_reader(bad_header.as_bytes(), Path::new("")).is_err());
    }
}
