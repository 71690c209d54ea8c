//! RBF epsilon-SVR: model, prediction and an SMO solver.
//!
//! The solver follows the dual formulation used by libsvm: `2l` variables
//! (`alpha` and `alpha*`), second-order working set selection and the usual
//! two-variable analytic update. No shrinking; the kernel matrix is held in
//! full, which is fine for the few hundred rows this is meant for.

use super::{clamp_mos, MappingError};

/// Trained RBF support vector regressor over standardized features.
///
/// Support vectors are stored in standardized coordinates: a query `x` is
/// mapped to `(x - feature_means) / feature_scales` before the kernel sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub conformance_tag: String,
}

impl SvrModel {
    pub fn dimension(&self) -> usize {
        self.feature_means.len()
    }

    /// Model that always predicts `value`.
    pub fn constant(value: f64, dimension: usize, conformance_tag: impl Into<String>) -> Self {
        Self {
            support_vectors: Vec::new(),
            dual_coefs: Vec::new(),
            bias: value,
            gamma: 1.0,
            feature_means: vec![0.0; dimension],
            feature_scales: vec![1.0; dimension],
            conformance_tag: conformance_tag.into(),
        }
    }

    pub fn validate(&self) -> Result<(), MappingError> {
        let dim = self.dimension();
        let corrupt = |msg: &str| Err(MappingError::CorruptModel(msg.to_string()));
        if dim == 0 {
            return corrupt("zero feature dimension");
        }
        if self.feature_scales.len() != dim {
            return corrupt("feature scale count differs from dimension");
        }
        if self
            .feature_scales
            .iter()
            .any(|&s| !(s > 0.0 && s.is_finite()))
        {
            return corrupt("feature scales must be positive");
        }
        if self.support_vectors.len() != self.dual_coefs.len() {
            return corrupt("support vector and coefficient counts differ");
        }
        if self.support_vectors.iter().any(|sv| sv.len() != dim) {
            return corrupt("support vector dimension differs from model dimension");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return corrupt("gamma must be positive");
        }
        if !self.bias.is_finite() {
            return corrupt("bias must be finite");
        }
        Ok(())
    }

    pub fn standardize(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(&self.feature_means)
            .zip(&self.feature_scales)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    /// Kernel sum plus bias, without clamping.
    pub fn predict_raw(&self, features: &[f64]) -> Result<f64, MappingError> {
        if features.len() != self.dimension() {
            return Err(MappingError::DimensionMismatch {
                expected: self.dimension(),
                actual: features.len(),
            });
        }
        let z = self.standardize(features);
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, &coef)| coef * rbf(&z, sv, self.gamma))
            .sum();
        Ok(sum + self.bias)
    }

    /// Prediction clamped to `[1, 5]`.
    pub fn predict(&self, features: &[f64]) -> Result<f64, MappingError> {
        self.predict_raw(features).map(clamp_mos)
    }
}

/// `exp(-gamma * |a - b|^2)`.
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Dual solution: `coefs[i] = alpha_i - alpha*_i`, prediction `sum coefs K + bias`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SvrSolution {
    pub coefs: Vec<f64>,
    pub bias: f64,
}

const TAU: f64 = 1e-12;

/// Solves the epsilon-SVR dual for a precomputed kernel matrix.
pub(crate) fn solve_epsilon_svr(
    kernel: &[Vec<f64>],
    targets: &[f64],
    c: f64,
    epsilon: f64,
    tolerance: f64,
) -> SvrSolution {
    let l = targets.len();
    let n = 2 * l;
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let k = |t: usize, s: usize| kernel[t % l][s % l];
    let q = |t: usize, s: usize| sign(t) * sign(s) * k(t, s);

    let mut alpha = vec![0.0; n];
    let mut grad: Vec<f64> = (0..n)
        .map(|t| {
            if t < l {
                epsilon - targets[t]
            } else {
                epsilon + targets[t - l]
            }
        })
        .collect();
    let at_upper = |a: f64| a >= c;
    let at_lower = |a: f64| a <= 0.0;

    let max_iter = 10_000_000usize.max(100 * n);
    for _ in 0..max_iter {
        // Working set selection, second-order (Fan, Chen and Lin).
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if sign(t) > 0.0 {
                if !at_upper(alpha[t]) && -grad[t] >= g_max {
                    g_max = -grad[t];
                    i_sel = Some(t);
                }
            } else if !at_lower(alpha[t]) && grad[t] >= g_max {
                g_max = grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };

        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let grad_diff = if sign(t) > 0.0 {
                if at_lower(alpha[t]) {
                    continue;
                }
                g_max2 = g_max2.max(grad[t]);
                g_max + grad[t]
            } else {
                if at_upper(alpha[t]) {
                    continue;
                }
                g_max2 = g_max2.max(-grad[t]);
                g_max - grad[t]
            };
            if grad_diff > 0.0 {
                let quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= best_obj {
                    best_obj = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else { break };
        if g_max + g_max2 < tolerance {
            break;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = k(i, i) + k(j, j) + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = k(i, i) + k(j, j) - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        if di != 0.0 || dj != 0.0 {
            for (t, g) in grad.iter_mut().enumerate() {
                *g += q(i, t) * di + q(j, t) * dj;
            }
        }
    }

    // Bias from free variables, or the midpoint of the feasible interval.
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        let yg = sign(t) * grad[t];
        if at_upper(alpha[t]) {
            if sign(t) < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if sign(t) > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    };

    SvrSolution {
        coefs: (0..l).map(|i| alpha[i] - alpha[i + l]).collect(),
        bias: -rho,
    }
}
