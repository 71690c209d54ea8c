//! Global, patch and sub-patch alignment.
//!
//! 1. [`global_align`] removes the bulk delay between the two recordings
//!    with a whole-signal cross-correlation.
//! 2. [`segment_patches`] tiles the reference spectrogram into patches and
//!    [`align_patches`] finds, greedily and left to right, the degraded
//!    patch that maximizes NSIM within a frame search window.
//! 3. [`fine_align`] refines each pair at sample resolution: the matching
//!    time-domain segments are cross-correlated, the degraded segment is
//!    shifted by the peak lag and both spectrograms are recomputed.

use log::warn;

use crate::matrix::Matrix;
use crate::similarity::{nsim_map, threshold_cells, SimilarityError};
use crate::spectrogram::{GammatoneAnalyzer, GammatoneSpectrogram, SpectrogramError};
use crate::vad::{VoiceActivityMask, MIN_VOICED_FRACTION};
use crate::xcorr::{best_lag, cross_correlate};
use crate::AudioSignal;

/// 24 frames of 20 ms hop, roughly half a second.
pub const DEFAULT_PATCH_FRAMES: usize = 24;
/// Patch search radius in frames (0.6 s).
pub const DEFAULT_SEARCH_FRAMES: usize = 30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlignmentError {
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("spectrogram has {frames} frames; a patch needs {patch_frames}")]
    TooFewFrames { frames: usize, patch_frames: usize },
    #[error("no patches survive voice activity masking ({voiced} of {frames} frames voiced)")]
    NoPatches { frames: usize, voiced: usize },
    #[error("patch length must be positive")]
    ZeroPatchLength,
    #[error(transparent)]
    Spectrogram(#[from] SpectrogramError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Output of [`global_align`].
#[derive(Debug, Clone)]
pub struct GlobalAlignment {
    pub reference: AudioSignal,
    pub degraded: AudioSignal,
    /// Positive when the degraded signal starts later than the reference.
    pub lag_samples: isize,
    /// Set when either input had zero energy and no search was done.
    pub degenerate: bool,
}

fn energy(samples: &[f64]) -> f64 {
    samples.iter().map(|s| s * s).sum()
}

/// Finds the whole-signal lag maximizing the normalized cross-correlation
/// and trims the leading signal so both start at the matching instant.
///
/// The degraded output is then cut or zero-padded to the reference length.
pub fn global_align(
    reference: &AudioSignal,
    degraded: &AudioSignal,
) -> Result<GlobalAlignment, AlignmentError> {
    if reference.sample_rate_hz() != degraded.sample_rate_hz() {
        return Err(AlignmentError::SampleRateMismatch(
            reference.sample_rate_hz(),
            degraded.sample_rate_hz(),
        ));
    }
    let (r, d) = (reference.samples(), degraded.samples());
    let norm = (energy(r) * energy(d)).sqrt();
    if norm == 0.0 {
        warn!("zero-energy input; skipping global alignment");
        return Ok(GlobalAlignment {
            reference: reference.clone(),
            degraded: fit_length(d, r.len(), reference.sample_rate_hz()),
            lag_samples: 0,
            degenerate: true,
        });
    }

    let corr: Vec<f64> = cross_correlate(r, d)
        .into_iter()
        .map(|c| c / norm)
        .collect();
    let first_lag = -(r.len() as isize - 1);
    let lag =
        best_lag(&corr, first_lag, first_lag, d.len() as isize - 1).expect("non-empty correlation");

    let (r_trim, d_trim) = if lag >= 0 {
        (r, &d[lag as usize..])
    } else {
        (&r[lag.unsigned_abs()..], d)
    };
    let rate = reference.sample_rate_hz();
    let reference = AudioSignal::new(r_trim.to_vec(), rate).expect("trimmed reference non-empty");
    let degraded = fit_length(d_trim, r_trim.len(), rate);
    Ok(GlobalAlignment {
        reference,
        degraded,
        lag_samples: lag,
        degenerate: false,
    })
}

fn fit_length(samples: &[f64], len: usize, rate: u32) -> AudioSignal {
    let mut out: Vec<f64> = samples.iter().take(len).copied().collect();
    out.resize(len, 0.0);
    AudioSignal::new(out, rate).expect("length is positive")
}

/// A run of consecutive spectrogram frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Patch {
    pub start_frame: usize,
    pub n_frames: usize,
}

impl Patch {
    pub fn end_frame(&self) -> usize {
        self.start_frame + self.n_frames
    }

    fn cells(&self, spec: &Matrix) -> Matrix {
        spec.columns(self.start_frame, self.n_frames)
    }
}

/// An aligned reference/degraded patch and its NSIM map.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair {
    pub ref_patch: Patch,
    pub deg_patch: Patch,
    /// Degraded start minus reference start, in frames.
    pub frame_offset: isize,
    /// Extra shift applied to the degraded segment by [`fine_align`], in samples.
    pub sample_lag: isize,
    pub nsim_cells: Matrix,
}

impl PatchPair {
    pub fn mean_nsim(&self) -> f64 {
        self.nsim_cells.mean()
    }
}

/// Non-overlapping patches tiling the reference spectrogram from frame 0.
///
/// With a mask, patches with fewer than half of their frames voiced are dropped.
pub fn segment_patches(
    spec: &GammatoneSpectrogram,
    patch_frames: usize,
    mask: Option<&VoiceActivityMask>,
) -> Result<Vec<Patch>, AlignmentError> {
    if patch_frames == 0 {
        return Err(AlignmentError::ZeroPatchLength);
    }
    let frames = spec.n_frames();
    if frames < patch_frames {
        return Err(AlignmentError::TooFewFrames {
            frames,
            patch_frames,
        });
    }
    let patches: Vec<Patch> = (0..frames / patch_frames)
        .map(|i| Patch {
            start_frame: i * patch_frames,
            n_frames: patch_frames,
        })
        .filter(|p| {
            mask.is_none_or(|m| m.voiced_fraction(p.start_frame, p.n_frames) >= MIN_VOICED_FRACTION)
        })
        .collect();
    if patches.is_empty() {
        let voiced = mask.map_or(0, |m| m.voiced.iter().filter(|&&v| v).count());
        return Err(AlignmentError::NoPatches { frames, voiced });
    }
    Ok(patches)
}

/// Settings shared by every NSIM evaluation of one comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchScoring {
    /// Absolute silence floor in dB (already anchored to the reference peak).
    pub absolute_floor_db: f64,
    pub rel_offset_db: f64,
    /// `L` for the NSIM constants.
    pub dynamic_range: f64,
}

/// Greedy monotone patch matching on thresholded spectrograms.
///
/// Each reference patch at frame `p` tries degraded starts `p + delta` for
/// `delta` in `[-search_frames, search_frames]`, restricted to the valid range
/// and to starts after the previously chosen degraded patch. The highest mean
/// NSIM wins; ties prefer smaller `|delta|`, then negative `delta`. A patch with
/// no admissible candidate is paired at `delta = 0` clipped into range.
pub fn align_patches(
    ref_patches: &[Patch],
    ref_spec: &Matrix,
    deg_spec: &Matrix,
    search_frames: usize,
    dynamic_range: f64,
) -> Result<Vec<PatchPair>, AlignmentError> {
    if ref_spec.rows() != deg_spec.rows() {
        return Err(SimilarityError::ShapeMismatch {
            left: ref_spec.shape(),
            right: deg_spec.shape(),
        }
        .into());
    }
    let mut pairs = Vec::with_capacity(ref_patches.len());
    let mut prev_start: Option<usize> = None;
    let search = search_frames as isize;

    for patch in ref_patches {
        if deg_spec.cols() < patch.n_frames {
            return Err(AlignmentError::TooFewFrames {
                frames: deg_spec.cols(),
                patch_frames: patch.n_frames,
            });
        }
        let last_start = (deg_spec.cols() - patch.n_frames) as isize;
        let p = patch.start_frame as isize;
        let lo = (p - search)
            .max(0)
            .max(prev_start.map_or(0, |s| s as isize + 1));
        let hi = (p + search).min(last_start);

        let ref_cells = patch.cells(ref_spec);
        let mut best: Option<(isize, f64, Matrix)> = None;
        for start in lo..=hi {
            let delta = start - p;
            let candidate = Patch {
                start_frame: start as usize,
                n_frames: patch.n_frames,
            };
            let map = nsim_map(&ref_cells, &candidate.cells(deg_spec), dynamic_range)?;
            let score = map.mean();
            let better = match &best {
                None => true,
                Some((b_delta, b_score, _)) => {
                    score > *b_score
                        || (score == *b_score
                            && (delta.abs() < b_delta.abs()
                                || (delta.abs() == b_delta.abs() && delta < *b_delta)))
                }
            };
            if better {
                best = Some((delta, score, map));
            }
        }

        let (delta, map) = match best {
            Some((delta, _, map)) => (delta, map),
            None => {
                let start = p.clamp(0, last_start);
                let deg_patch = Patch {
                    start_frame: start as usize,
                    n_frames: patch.n_frames,
                };
                let map = nsim_map(&ref_cells, &deg_patch.cells(deg_spec), dynamic_range)?;
                (start - p, map)
            }
        };
        let deg_start = (p + delta) as usize;
        prev_start = Some(deg_start);
        pairs.push(PatchPair {
            ref_patch: *patch,
            deg_patch: Patch {
                start_frame: deg_start,
                n_frames: patch.n_frames,
            },
            frame_offset: delta,
            sample_lag: 0,
            nsim_cells: map,
        });
    }
    Ok(pairs)
}

/// Copies `len` samples starting at `start` (possibly negative), zero-filling
/// anything outside the signal.
fn segment(samples: &[f64], start: isize, len: usize) -> Vec<f64> {
    (0..len as isize)
        .map(|i| {
            let idx = start + i;
            if idx >= 0 && (idx as usize) < samples.len() {
                samples[idx as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// Sample-resolution refinement of one aligned pair.
///
/// The pair keeps whichever NSIM map, before or after the shift, has the
/// higher mean, so this never lowers a pair's score.
pub fn fine_align(
    pair: &PatchPair,
    reference: &AudioSignal,
    degraded: &AudioSignal,
    analyzer: &GammatoneAnalyzer,
    scoring: &PatchScoring,
) -> Result<PatchPair, AlignmentError> {
    let layout = analyzer.layout();
    let hop = layout.hop as isize;
    let seg_len = layout.samples_for_frames(pair.ref_patch.n_frames);
    let ref_start = layout.frame_start(pair.ref_patch.start_frame) as isize;
    let deg_start = layout.frame_start(pair.deg_patch.start_frame) as isize;

    let ref_seg = segment(reference.samples(), ref_start, seg_len);
    let deg_ext = segment(
        degraded.samples(),
        deg_start - hop,
        seg_len + 2 * layout.hop,
    );
    if energy(&ref_seg) == 0.0 || energy(&deg_ext) == 0.0 {
        return Ok(pair.clone());
    }

    let corr = cross_correlate(&ref_seg, &deg_ext);
    let first_lag = -(seg_len as isize - 1) - hop;
    let Some(lag) = best_lag(&corr, first_lag, -hop, hop) else {
        return Ok(pair.clone());
    };

    let deg_seg = segment(degraded.samples(), deg_start + lag, seg_len);
    let ref_spec = analyzer.analyze(&ref_seg)?;
    let deg_spec = analyzer.analyze(&deg_seg)?;
    let (r, d) = threshold_cells(
        &ref_spec.values,
        &deg_spec.values,
        scoring.absolute_floor_db,
        scoring.rel_offset_db,
    )?;
    let shifted = nsim_map(&r, &d, scoring.dynamic_range)?;

    if shifted.mean() > pair.mean_nsim() {
        Ok(PatchPair {
            sample_lag: lag,
            nsim_cells: shifted,
            ..pair.clone()
        })
    } else {
        Ok(pair.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrogram::{HOP_S, WINDOW_S};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        // Small LCG; only needs to be deterministic and broadband.
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.5
            })
            .collect()
    }

    fn spec_with_frames(frames: usize) -> GammatoneSpectrogram {
        GammatoneSpectrogram {
            values: Matrix::from_fn(4, frames, |r, c| ((r * 31 + c * 7) % 13) as f64),
            center_freqs_hz: vec![100.0, 200.0, 400.0, 800.0],
            window_s: WINDOW_S,
            hop_s: HOP_S,
            sample_rate_hz: 16000,
        }
    }

    #[test]
    fn identical_signals_have_zero_lag() {
        let x = AudioSignal::new(noise(8000, 1), 16000).unwrap();
        let g = global_align(&x, &x).unwrap();
        assert_eq!(g.lag_samples, 0);
        assert_eq!(g.reference, x);
        assert_eq!(g.degraded, x);
    }

    #[test]
    fn prepended_silence_is_recovered() {
        let x = noise(16000, 2);
        let mut delayed = vec![0.0; 160];
        delayed.extend_from_slice(&x);
        let r = AudioSignal::new(x, 16000).unwrap();
        let d = AudioSignal::new(delayed, 16000).unwrap();
        let g = global_align(&r, &d).unwrap();
        assert_eq!(g.lag_samples, 160);
        assert_eq!(g.reference.samples(), g.degraded.samples());
    }

    #[test]
    fn degraded_leading_trims_reference() {
        let x = noise(16000, 3);
        let r = AudioSignal::new(x.clone(), 16000).unwrap();
        let d = AudioSignal::new(x[200..].to_vec(), 16000).unwrap();
        let g = global_align(&r, &d).unwrap();
        assert_eq!(g.lag_samples, -200);
        assert_eq!(g.reference.samples(), &x[200..]);
        assert_eq!(g.degraded.samples(), &x[200..]);
    }

    #[test]
    fn zero_energy_is_degenerate() {
        let r = AudioSignal::new(noise(4000, 4), 16000).unwrap();
        let d = AudioSignal::new(vec![0.0; 4000], 16000).unwrap();
        let g = global_align(&r, &d).unwrap();
        assert!(g.degenerate);
        assert_eq!(g.lag_samples, 0);
    }

    #[test]
    fn mismatched_rates() {
        let r = AudioSignal::new(vec![0.1; 10], 16000).unwrap();
        let d = AudioSignal::new(vec![0.1; 10], 48000).unwrap();
        assert!(global_align(&r, &d).is_err());
    }

    #[test]
    fn patch_tiling() {
        let p = segment_patches(&spec_with_frames(47), 24, None).unwrap();
        assert_eq!(
            p,
            vec![Patch {
                start_frame: 0,
                n_frames: 24
            }]
        );
        let p = segment_patches(&spec_with_frames(96), 24, None).unwrap();
        let starts: Vec<usize> = p.iter().map(|p| p.start_frame).collect();
        assert_eq!(starts, vec![0, 24, 48, 72]);
        assert!(matches!(
            segment_patches(&spec_with_frames(10), 24, None),
            Err(AlignmentError::TooFewFrames { .. })
        ));
    }

    #[test]
    fn mask_drops_quiet_patches() {
        let spec = spec_with_frames(48);
        let mut voiced = vec![false; 48];
        voiced[24..36].iter_mut().for_each(|v| *v = true);
        let mask = VoiceActivityMask { voiced };
        let p = segment_patches(&spec, 24, Some(&mask)).unwrap();
        assert_eq!(
            p,
            vec![Patch {
                start_frame: 24,
                n_frames: 24
            }]
        );

        let silent = VoiceActivityMask {
            voiced: vec![false; 48],
        };
        assert_eq!(
            segment_patches(&spec, 24, Some(&silent)),
            Err(AlignmentError::NoPatches {
                frames: 48,
                voiced: 0
            })
        );
    }

    fn textured(frames: usize) -> Matrix {
        Matrix::from_fn(6, frames, |r, c| {
            let x = (r as f64 * 1.3 + c as f64 * 0.77).sin() * 20.0;
            x + ((r * 17 + c * 29) % 11) as f64
        })
    }

    #[test]
    fn identity_patches_have_zero_offset() {
        let m = textured(120);
        let patches: Vec<Patch> = (0..5)
            .map(|i| Patch {
                start_frame: i * 24,
                n_frames: 24,
            })
            .collect();
        let pairs = align_patches(&patches, &m, &m, 30, 60.0).unwrap();
        assert!(pairs.iter().all(|p| p.frame_offset == 0));
        assert!(pairs.iter().all(|p| p.mean_nsim() == 1.0));
    }

    #[test]
    fn shifted_spectrogram_recovers_offset() {
        let base = textured(130);
        let reference = base.columns(3, 120);
        let patches: Vec<Patch> = (0..4)
            .map(|i| Patch {
                start_frame: i * 24,
                n_frames: 24,
            })
            .collect();
        // Degraded = reference delayed by 3 frames.
        let degraded = base.columns(0, 123);
        let pairs = align_patches(&patches, &reference, &degraded, 30, 60.0).unwrap();
        for p in &pairs {
            assert_eq!(p.frame_offset, 3);
        }
    }

    #[test]
    fn fallback_when_no_candidate() {
        let m = textured(48);
        // Second patch overlaps the first; its only candidates would start
        // at or before the previous choice.
        let patches = [
            Patch {
                start_frame: 24,
                n_frames: 24,
            },
            Patch {
                start_frame: 24,
                n_frames: 24,
            },
        ];
        let pairs = align_patches(&patches, &m, &m, 0, 60.0).unwrap();
        assert_eq!(pairs[1].deg_patch.start_frame, 24);
        assert_eq!(pairs[1].frame_offset, 0);
    }

    fn scoring() -> PatchScoring {
        PatchScoring {
            absolute_floor_db: -100.0,
            rel_offset_db: 45.0,
            dynamic_range: 120.0,
        }
    }

    #[test]
    fn fine_align_recovers_intra_patch_shift() {
        let analyzer = GammatoneAnalyzer::for_mode(crate::Mode::Speech);
        let x = noise(32000, 9);
        let shift = 37;
        let mut y = vec![0.0; shift];
        y.extend_from_slice(&x[..x.len() - shift]);
        let r = AudioSignal::new(x, 16000).unwrap();
        let d = AudioSignal::new(y, 16000).unwrap();
        let layout = analyzer.layout();
        let rs = analyzer.analyze(r.samples()).unwrap();
        let ds = analyzer.analyze(d.samples()).unwrap();
        let patch = Patch {
            start_frame: 24,
            n_frames: 24,
        };
        let pre = nsim_map(&patch.cells(&rs.values), &patch.cells(&ds.values), 120.0).unwrap();
        let pair = PatchPair {
            ref_patch: patch,
            deg_patch: patch,
            frame_offset: 0,
            sample_lag: 0,
            nsim_cells: pre,
        };
        let refined = fine_align(&pair, &r, &d, &analyzer, &scoring()).unwrap();
        assert!(layout.hop > shift);
        assert_eq!(refined.sample_lag, 37);
        assert_eq!(refined.mean_nsim(), 1.0);
        assert!(refined.mean_nsim() >= pair.mean_nsim());
    }

    #[test]
    fn fine_align_identity_keeps_pair() {
        let analyzer = GammatoneAnalyzer::for_mode(crate::Mode::Speech);
        let r = AudioSignal::new(noise(16000, 5), 16000).unwrap();
        let patch = Patch {
            start_frame: 0,
            n_frames: 24,
        };
        let pair = PatchPair {
            ref_patch: patch,
            deg_patch: patch,
            frame_offset: 0,
            sample_lag: 0,
            nsim_cells: Matrix::filled(21, 24, 1.0),
        };
        let refined = fine_align(&pair, &r, &r, &analyzer, &scoring()).unwrap();
        assert_eq!(refined, pair);
    }
}
