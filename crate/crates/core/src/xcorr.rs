//! FFT cross-correlation.

use rustfft::num_complex::Complex;
use rustfft::FftPlannerScalar;

/// Linear cross-correlation `c[lag] = sum_i a[i] * b[i + lag]` for every
/// lag in `[-(a.len() - 1), b.len() - 1]`. Element `k` holds lag
/// `k - (a.len() - 1)`.
pub(crate) fn cross_correlate(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlannerScalar::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    // Reverse `a` so that convolution gives correlation.
    let mut fa: Vec<Complex<f64>> = a.iter().rev().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(n, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(n, Complex::new(0.0, 0.0));
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inverse.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Lag in `[min_lag, max_lag]` maximizing `corr`, where `corr[k]` holds lag
/// `k as isize + first_lag`. Ties go to the smaller magnitude, then to the
/// negative lag.
pub(crate) fn best_lag(
    corr: &[f64],
    first_lag: isize,
    min_lag: isize,
    max_lag: isize,
) -> Option<isize> {
    let mut best: Option<(isize, f64)> = None;
    for lag in min_lag..=max_lag {
        let idx = lag - first_lag;
        if idx < 0 || idx as usize >= corr.len() {
            continue;
        }
        let value = corr[idx as usize];
        best = match best {
            None => Some((lag, value)),
            Some((b_lag, b_val)) => {
                let better = value > b_val
                    || (value == b_val
                        && (lag.abs() < b_lag.abs() || (lag.abs() == b_lag.abs() && lag < b_lag)));
                if better {
                    Some((lag, value))
                } else {
                    Some((b_lag, b_val))
                }
            }
        };
    }
    best.map(|(lag, _)| lag)
}
