//! Silence thresholding and the neurogram similarity index (NSIM).
//!
//! Thresholding floors every cell of both spectrograms at
//!
//! ```text
//! y(t, f) = max(Y_min, max(r(t, f), d(t, f)) - rel_offset, x(t, f))
//! ```
//!
//! where `Y_min` sits `abs_floor_db` below the loudest reference cell. Low
//! level differences that are perceptually irrelevant (near-silence against
//! faint ambient noise) therefore collapse to identical values.
//!
//! NSIM is the luminance x structure product of SSIM evaluated with a 3x3
//! Gaussian window (sigma 0.5) over band x frame cells.

use crate::alignment::PatchPair;
use crate::matrix::Matrix;
use crate::spectrogram::GammatoneSpectrogram;

/// Width of the Gaussian neighbourhood weights, in cells.
pub const NSIM_WINDOW_SIGMA: f64 = 0.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimilarityError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("dynamic range must be positive and finite, got {0}")]
    InvalidDynamicRange(f64),
    #[error("no patch pairs to aggregate")]
    EmptyInput,
}

/// Silence threshold settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    /// Absolute floor relative to the reference's loudest cell (negative dB).
    pub abs_floor_db: f64,
    /// Distance below the louder of the two cells for the relative floor (positive dB).
    pub rel_offset_db: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        Self {
            abs_floor_db: -80.0,
            rel_offset_db: 45.0,
        }
    }
}

impl ThresholdParams {
    /// Floors at minus infinity: thresholding becomes the identity.
    pub fn disabled() -> Self {
        Self {
            abs_floor_db: f64::NEG_INFINITY,
            rel_offset_db: f64::INFINITY,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.abs_floor_db < 0.0 && self.rel_offset_db > 0.0
    }

    /// The absolute floor in dB for a reference whose loudest cell is `reference_peak_db`.
    pub fn absolute_floor(&self, reference_peak_db: f64) -> f64 {
        reference_peak_db + self.abs_floor_db
    }
}

fn check_shapes(a: &Matrix, b: &Matrix) -> Result<(), SimilarityError> {
    if a.shape() != b.shape() {
        return Err(SimilarityError::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

/// Applies both floors cell by cell with an explicit absolute floor.
///
/// Used directly when re-thresholding patch spectrograms so that the floor
/// stays anchored to the full reference.
pub fn threshold_cells(
    reference: &Matrix,
    degraded: &Matrix,
    absolute_floor_db: f64,
    rel_offset_db: f64,
) -> Result<(Matrix, Matrix), SimilarityError> {
    check_shapes(reference, degraded)?;
    let (rows, cols) = reference.shape();
    let mut r_out = Matrix::zeros(rows, cols);
    let mut d_out = Matrix::zeros(rows, cols);
    for row in 0..rows {
        for col in 0..cols {
            let r = reference.get(row, col);
            let d = degraded.get(row, col);
            let floor = absolute_floor_db.max(r.max(d) - rel_offset_db);
            r_out.set(row, col, floor.max(r));
            d_out.set(row, col, floor.max(d));
        }
    }
    Ok((r_out, d_out))
}

/// Thresholds a full spectrogram pair; the absolute floor is anchored to
/// the loudest reference cell.
pub fn threshold_pair(
    reference: &GammatoneSpectrogram,
    degraded: &GammatoneSpectrogram,
    params: ThresholdParams,
) -> Result<(GammatoneSpectrogram, GammatoneSpectrogram), SimilarityError> {
    let floor = params.absolute_floor(reference.values.max());
    let (r, d) = threshold_cells(
        &reference.values,
        &degraded.values,
        floor,
        params.rel_offset_db,
    )?;
    Ok((reference.with_values(r), degraded.with_values(d)))
}

/// Normalized 3x3 Gaussian weights, indexed `[d_row + 1][d_col + 1]`.
fn gaussian_kernel() -> [[f64; 3]; 3] {
    let mut k = [[0.0; 3]; 3];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let dy = i as f64 - 1.0;
            let dx = j as f64 - 1.0;
            *w = (-(dx * dx + dy * dy) / (2.0 * NSIM_WINDOW_SIGMA * NSIM_WINDOW_SIGMA)).exp();
        }
    }
    k
}

/// Per-cell NSIM between two equally shaped patches.
///
/// Both patches are shifted by their common minimum before the local
/// moments are taken; `dynamic_range` sets the stabilizing constants
/// `C1 = (0.01 L)^2` and `C2 = (0.03 L)^2 / 2`. Edge cells use the part of the
/// window that falls inside the patch, renormalized.
pub fn nsim_map(
    reference: &Matrix,
    degraded: &Matrix,
    dynamic_range: f64,
) -> Result<Matrix, SimilarityError> {
    let (luminance, structure) = nsim_terms(reference, degraded, dynamic_range)?;
    let (rows, cols) = luminance.shape();
    // Rounding can push a product a hair above 1.
    Ok(Matrix::from_fn(rows, cols, |r, c| {
        (luminance.get(r, c) * structure.get(r, c)).min(1.0)
    }))
}

/// Luminance and structure maps whose product is [`nsim_map`].
pub fn nsim_terms(
    reference: &Matrix,
    degraded: &Matrix,
    dynamic_range: f64,
) -> Result<(Matrix, Matrix), SimilarityError> {
    check_shapes(reference, degraded)?;
    if !(dynamic_range > 0.0 && dynamic_range.is_finite()) {
        return Err(SimilarityError::InvalidDynamicRange(dynamic_range));
    }
    let c1 = (K1 * dynamic_range).powi(2);
    let c2 = (K2 * dynamic_range).powi(2) / 2.0;
    let offset = reference.min().min(degraded.min());
    let r = reference.map(|v| v - offset);
    let d = degraded.map(|v| v - offset);
    let kernel = gaussian_kernel();
    let (rows, cols) = r.shape();

    let mut luminance = Matrix::zeros(rows, cols);
    let mut structure = Matrix::zeros(rows, cols);
    let mut neighbours: Vec<(f64, f64, f64)> = Vec::with_capacity(9);
    for row in 0..rows {
        for col in 0..cols {
            neighbours.clear();
            for (ki, krow) in kernel.iter().enumerate() {
                let Some(nr) = (row + ki).checked_sub(1).filter(|&v| v < rows) else {
                    continue;
                };
                for (kj, &w) in krow.iter().enumerate() {
                    let Some(nc) = (col + kj).checked_sub(1).filter(|&v| v < cols) else {
                        continue;
                    };
                    neighbours.push((w, r.get(nr, nc), d.get(nr, nc)));
                }
            }
            let total: f64 = neighbours.iter().map(|n| n.0).sum();
            let mu_r = neighbours.iter().map(|&(w, x, _)| w * x).sum::<f64>() / total;
            let mu_d = neighbours.iter().map(|&(w, _, y)| w * y).sum::<f64>() / total;
            let mut var_r = 0.0;
            let mut var_d = 0.0;
            let mut cov = 0.0;
            for &(w, x, y) in &neighbours {
                let dr = x - mu_r;
                let dd = y - mu_d;
                var_r += w * dr * dr;
                var_d += w * dd * dd;
                cov += w * dr * dd;
            }
            var_r /= total;
            var_d /= total;
            cov /= total;

            // sqrt(v * v) == v exactly, so identical inputs give a structure term of 1.
            luminance.set(
                row,
                col,
                (2.0 * mu_r * mu_d + c1) / (mu_r * mu_r + mu_d * mu_d + c1),
            );
            structure.set(row, col, (cov + c2) / ((var_r * var_d).sqrt() + c2));
        }
    }
    Ok((luminance, structure))
}

/// Aggregated similarity over all aligned patch pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct NsimResult {
    /// Mean NSIM per frequency band.
    pub fvnsim: Vec<f64>,
    /// Mean NSIM over bands, per aligned frame, in patch order.
    pub per_frame: Vec<f64>,
    /// Mean NSIM of each patch pair.
    pub per_patch: Vec<f64>,
    /// Mean of `per_patch`.
    pub overall: f64,
}

pub fn aggregate_nsim(pairs: &[PatchPair]) -> Result<NsimResult, SimilarityError> {
    aggregate_maps(pairs.iter().map(|p| &p.nsim_cells))
}

/// Aggregates raw per-pair NSIM maps (all with the same band count).
pub fn aggregate_maps<'a>(
    maps: impl IntoIterator<Item = &'a Matrix>,
) -> Result<NsimResult, SimilarityError> {
    let maps: Vec<&Matrix> = maps.into_iter().collect();
    let first = maps.first().ok_or(SimilarityError::EmptyInput)?;
    let n_bands = first.rows();
    if let Some(bad) = maps.iter().find(|m| m.rows() != n_bands) {
        return Err(SimilarityError::ShapeMismatch {
            left: first.shape(),
            right: bad.shape(),
        });
    }

    let mut band_sums = vec![0.0; n_bands];
    let mut band_counts = 0usize;
    let mut per_frame = Vec::new();
    let mut per_patch = Vec::with_capacity(maps.len());
    for map in &maps {
        for (band, sum) in band_sums.iter_mut().enumerate() {
            *sum += map.row(band).iter().sum::<f64>();
        }
        band_counts += map.cols();
        for col in 0..map.cols() {
            per_frame.push((0..n_bands).map(|b| map.get(b, col)).sum::<f64>() / n_bands as f64);
        }
        per_patch.push(map.mean());
    }
    let fvnsim = band_sums
        .into_iter()
        .map(|s| s / band_counts as f64)
        .collect();
    let overall = per_patch.iter().sum::<f64>() / per_patch.len() as f64;
    Ok(NsimResult {
        fvnsim,
        per_frame,
        per_patch,
        overall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_evaluated_threshold() {
        let r = Matrix::from_vec(1, 1, vec![-10.0]);
        let d = Matrix::from_vec(1, 1, vec![-70.0]);
        let (yr, yd) = threshold_cells(&r, &d, -80.0, 45.0).unwrap();
        assert_eq!(yr.get(0, 0), -10.0);
        assert_eq!(yd.get(0, 0), -55.0);
    }

    #[test]
    fn loud_cells_pass_through() {
        let r = Matrix::from_vec(1, 2, vec![-10.0, -20.0]);
        let d = Matrix::from_vec(1, 2, vec![-12.0, -25.0]);
        let (yr, yd) = threshold_cells(&r, &d, -80.0, 45.0).unwrap();
        assert_eq!(yr, r);
        assert_eq!(yd, d);
    }

    #[test]
    fn sub_floor_cells_collapse() {
        let r = Matrix::from_vec(1, 1, vec![-150.0]);
        let d = Matrix::from_vec(1, 1, vec![-95.0]);
        let (yr, yd) = threshold_cells(&r, &d, -80.0, 45.0).unwrap();
        assert_eq!(yr.get(0, 0), yd.get(0, 0));
        assert_eq!(yr.get(0, 0), -80.0);
    }

    #[test]
    fn threshold_shape_mismatch() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(3, 2);
        assert!(matches!(
            threshold_cells(&a, &b, -80.0, 45.0),
            Err(SimilarityError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn disabled_threshold_is_identity() {
        let r = Matrix::from_vec(1, 3, vec![-200.0, -10.0, 0.0]);
        let d = Matrix::from_vec(1, 3, vec![-100.0, -190.0, -3.0]);
        let p = ThresholdParams::disabled();
        let (yr, yd) = threshold_cells(&r, &d, p.absolute_floor(r.max()), p.rel_offset_db).unwrap();
        assert_eq!(yr, r);
        assert_eq!(yd, d);
    }

    #[test]
    fn identical_patches_score_exactly_one() {
        let m = Matrix::from_fn(6, 7, |r, c| {
            -40.0 + (r * 7 + c) as f64 * 1.37 - (c as f64).sin()
        });
        let map = nsim_map(&m, &m, 60.0).unwrap();
        assert!(map.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_offset_hits_luminance_only() {
        let m = Matrix::from_fn(5, 5, |r, c| ((r * 5 + c) as f64 * 0.7).cos() * 10.0);
        let shifted = m.map(|v| v + 3.0);
        let map = nsim_map(&m, &shifted, 40.0).unwrap();
        assert!(map.as_slice().iter().all(|&v| v < 1.0));

        let (lum, structure) = nsim_terms(&m, &shifted, 40.0).unwrap();
        assert!(lum.as_slice().iter().all(|&v| v < 1.0));
        for &v in structure.as_slice() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_dynamic_range() {
        let m = Matrix::zeros(2, 2);
        assert!(nsim_map(&m, &m, 0.0).is_err());
        assert!(nsim_map(&m, &m, f64::NAN).is_err());
    }

    #[test]
    fn aggregate_two_patches() {
        let a = Matrix::filled(3, 4, 0.8);
        let b = Matrix::filled(3, 2, 0.6);
        let res = aggregate_maps([&a, &b]).unwrap();
        assert_abs_diff_eq!(res.overall, 0.7, epsilon = 1e-15);
        assert_eq!(res.per_frame.len(), 6);
        assert_abs_diff_eq!(res.per_patch[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(res.per_patch[1], 0.6, epsilon = 1e-15);
        // Band means weight cells, not patches.
        assert_abs_diff_eq!(
            res.fvnsim[0],
            (0.8 * 4.0 + 0.6 * 2.0) / 6.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn aggregate_all_ones() {
        let a = Matrix::filled(4, 3, 1.0);
        let res = aggregate_maps([&a, &a]).unwrap();
        assert!(res.fvnsim.iter().all(|&v| v == 1.0));
        assert_eq!(res.overall, 1.0);
    }

    #[test]
    fn aggregate_empty() {
        assert_eq!(
            aggregate_maps(std::iter::empty()),
            Err(SimilarityError::EmptyInput)
        );
    }
}
