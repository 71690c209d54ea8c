//! Log-power gammatone spectrogram on an ERB-spaced band layout.
//!
//! Each 80 ms Hann-windowed frame (20 ms hop) is transformed with an FFT and
//! its power spectrum is weighted by the squared magnitude response of a
//! fourth-order gammatone filter per band:
//!
//! ```text
//! |H_b(f)|^2 = (1 + ((f - fc_b) / (1.019 * ERB(fc_b)))^2)^-4
//! ```
//!
//! Band power is normalized so that it approximates the mean-square signal
//! power inside the band (a full-scale sine sits near -3 dB), then converted
//! to dB with a `1e-20` floor.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlannerScalar};

use crate::matrix::Matrix;
use crate::{AudioSignal, Mode};

pub const WINDOW_S: f64 = 0.080;
pub const HOP_S: f64 = 0.020;
/// Added to band power before taking the log.
pub const POWER_FLOOR: f64 = 1e-20;

/// Gammatone bandwidth factor giving an equivalent rectangular bandwidth of one ERB.
const GAMMATONE_B: f64 = 1.019;
/// Weights below this are dropped from the per-band bin lists.
const MIN_WEIGHT: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrogramError {
    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),
    #[error("invalid band range: {0}")]
    InvalidRange(String),
    #[error("signal has {samples} samples but one {window}-sample window is required")]
    SignalTooShort { samples: usize, window: usize },
}

/// ERB-rate (Glasberg and Moore): `21.4 * log10(1 + 0.00437 f)`.
pub fn erb_rate(freq_hz: f64) -> Result<f64, SpectrogramError> {
    if freq_hz.is_nan() || freq_hz <= 0.0 {
        return Err(SpectrogramError::NonPositiveFrequency(freq_hz));
    }
    Ok(21.4 * (1.0 + 0.00437 * freq_hz).log10())
}

/// Inverse of [`erb_rate`].
pub fn erb_rate_to_hz(rate: f64) -> f64 {
    (10f64.powf(rate / 21.4) - 1.0) / 0.00437
}

/// Equivalent rectangular bandwidth at `freq_hz`: `24.7 (4.37 f / 1000 + 1)`.
pub fn erb_bandwidth(freq_hz: f64) -> f64 {
    24.7 * (4.37 * freq_hz / 1000.0 + 1.0)
}

/// `n_bands` centre frequencies uniformly spaced on the ERB-rate scale,
/// from `f_min` to `f_max` inclusive.
pub fn center_frequencies(
    n_bands: usize,
    f_min: f64,
    f_max: f64,
) -> Result<Vec<f64>, SpectrogramError> {
    if n_bands < 2 {
        return Err(SpectrogramError::InvalidRange(format!(
            "need at least 2 bands, got {n_bands}"
        )));
    }
    if !(f_min > 0.0 && f_min < f_max && f_max.is_finite()) {
        return Err(SpectrogramError::InvalidRange(format!(
            "need 0 < f_min < f_max, got [{f_min}, {f_max}]"
        )));
    }
    let lo = erb_rate(f_min)?;
    let hi = erb_rate(f_max)?;
    let step = (hi - lo) / (n_bands - 1) as f64;
    Ok((0..n_bands)
        .map(|i| match i {
            0 => f_min,
            i if i == n_bands - 1 => f_max,
            i => erb_rate_to_hz(lo + step * i as f64),
        })
        .collect())
}

/// Frame geometry in samples for a given rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub window: usize,
    pub hop: usize,
}

impl FrameLayout {
    pub fn for_rate(sample_rate_hz: u32) -> Self {
        let rate = f64::from(sample_rate_hz);
        Self {
            window: (WINDOW_S * rate).round() as usize,
            hop: (HOP_S * rate).round() as usize,
        }
    }

    /// `floor((len - window) / hop) + 1`, or 0 when the signal is shorter than a window.
    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.window {
            0
        } else {
            (n_samples - self.window) / self.hop + 1
        }
    }

    /// Samples spanned by `frames` consecutive frames.
    pub fn samples_for_frames(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.window
        }
    }

    /// First sample covered by frame `frame`.
    pub fn frame_start(&self, frame: usize) -> usize {
        frame * self.hop
    }
}

/// Band x frame matrix of log power in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct GammatoneSpectrogram {
    pub values: Matrix,
    pub center_freqs_hz: Vec<f64>,
    pub window_s: f64,
    pub hop_s: f64,
    pub sample_rate_hz: u32,
}

impl GammatoneSpectrogram {
    pub fn n_bands(&self) -> usize {
        self.values.rows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.cols()
    }

    /// Same metadata, different values.
    pub fn with_values(&self, values: Matrix) -> Self {
        Self {
            values,
            center_freqs_hz: self.center_freqs_hz.clone(),
            window_s: self.window_s,
            hop_s: self.hop_s,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

struct BandWeights {
    first_bin: usize,
    weights: Vec<f64>,
}

/// Precomputed analysis state for one sample rate and band layout.
///
/// Reusing an analyzer avoids re-planning the FFT and re-deriving the
/// filter weights, which matters when patch spectrograms are recomputed.
pub struct GammatoneAnalyzer {
    sample_rate_hz: u32,
    layout: FrameLayout,
    center_freqs_hz: Vec<f64>,
    window: Vec<f64>,
    power_scale: f64,
    bands: Vec<BandWeights>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GammatoneAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GammatoneAnalyzer")
            .field("sample_rate_hz", &self.sample_rate_hz)
            .field("layout", &self.layout)
            .field("center_freqs_hz", &self.center_freqs_hz)
            .finish_non_exhaustive()
    }
}

impl GammatoneAnalyzer {
    pub fn new(sample_rate_hz: u32, center_freqs_hz: Vec<f64>) -> Result<Self, SpectrogramError> {
        let nyquist = f64::from(sample_rate_hz) / 2.0;
        if center_freqs_hz.is_empty() {
            return Err(SpectrogramError::InvalidRange("no bands".into()));
        }
        if center_freqs_hz.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpectrogramError::InvalidRange(
                "centre frequencies must be strictly ascending".into(),
            ));
        }
        if let Some(&f) = center_freqs_hz.iter().find(|&&f| f <= 0.0 || f >= nyquist) {
            return Err(SpectrogramError::InvalidRange(format!(
                "centre frequency {f} Hz outside (0, {nyquist})"
            )));
        }

        let layout = FrameLayout::for_rate(sample_rate_hz);
        let n = layout.window;
        // Periodic Hann.
        let window: Vec<f64> = (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        let window_energy: f64 = window.iter().map(|w| w * w).sum();
        let power_scale = 2.0 / (n as f64 * window_energy);

        let n_bins = n / 2 + 1;
        let bin_hz = f64::from(sample_rate_hz) / n as f64;
        let bands = center_freqs_hz
            .iter()
            .map(|&fc| {
                let b = GAMMATONE_B * erb_bandwidth(fc);
                let all: Vec<f64> = (0..n_bins)
                    .map(|k| {
                        let x = (k as f64 * bin_hz - fc) / b;
                        (1.0 + x * x).powi(-4)
                    })
                    .collect();
                let first = all.iter().position(|&w| w >= MIN_WEIGHT).unwrap_or(0);
                let last = all.iter().rposition(|&w| w >= MIN_WEIGHT).unwrap_or(0);
                BandWeights {
                    first_bin: first,
                    weights: all[first..=last].to_vec(),
                }
            })
            .collect();

        let fft = FftPlannerScalar::new().plan_fft_forward(n);
        Ok(Self {
            sample_rate_hz,
            layout,
            center_freqs_hz,
            window,
            power_scale,
            bands,
            fft,
        })
    }

    /// Analyzer with the default band layout for `mode`.
    pub fn for_mode(mode: Mode) -> Self {
        let (lo, hi) = mode.band_range_hz();
        let bands = center_frequencies(mode.n_bands(), lo, hi).expect("mode band layout is valid");
        Self::new(mode.sample_rate_hz(), bands).expect("mode band layout is valid")
    }

    pub fn layout(&self) -> FrameLayout {
        self.layout
    }

    pub fn center_freqs_hz(&self) -> &[f64] {
        &self.center_freqs_hz
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    /// Spectrogram of a raw sample slice (assumed to be at this analyzer's rate).
    pub fn analyze(&self, samples: &[f64]) -> Result<GammatoneSpectrogram, SpectrogramError> {
        let n_frames = self.layout.n_frames(samples.len());
        if n_frames == 0 {
            return Err(SpectrogramError::SignalTooShort {
                samples: samples.len(),
                window: self.layout.window,
            });
        }
        let n_bands = self.center_freqs_hz.len();
        let mut values = Matrix::zeros(n_bands, n_frames);
        let mut buf = vec![Complex::new(0.0, 0.0); self.layout.window];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0; self.layout.window / 2 + 1];

        for frame in 0..n_frames {
            let start = self.layout.frame_start(frame);
            let chunk = &samples[start..start + self.layout.window];
            for ((dst, &x), &w) in buf.iter_mut().zip(chunk).zip(&self.window) {
                *dst = Complex::new(x * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            for (band, weights) in self.bands.iter().enumerate() {
                let bins = &power[weights.first_bin..weights.first_bin + weights.weights.len()];
                let band_power: f64 = bins
                    .iter()
                    .zip(&weights.weights)
                    .map(|(p, w)| p * w)
                    .sum::<f64>()
                    * self.power_scale;
                values.set(band, frame, 10.0 * (band_power + POWER_FLOOR).log10());
            }
        }

        Ok(GammatoneSpectrogram {
            values,
            center_freqs_hz: self.center_freqs_hz.clone(),
            window_s: WINDOW_S,
            hop_s: HOP_S,
            sample_rate_hz: self.sample_rate_hz,
        })
    }
}

/// One-shot spectrogram of `signal` over the given band centres.
pub fn compute_spectrogram(
    signal: &AudioSignal,
    bands: &[f64],
) -> Result<GammatoneSpectrogram, SpectrogramError> {
    GammatoneAnalyzer::new(signal.sample_rate_hz(), bands.to_vec())?.analyze(signal.samples())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn erb_rate_values() {
        // High-precision reference values: 21.4*log10(5.37), 21.4*log10(1.2185).
        assert_abs_diff_eq!(erb_rate(1000.0).unwrap(), 15.6214497139705, epsilon = 1e-12);
        assert_abs_diff_eq!(erb_rate(50.0).unwrap(), 1.8366664173439, epsilon = 1e-12);
        assert!(erb_rate(2000.0).unwrap() > erb_rate(1000.0).unwrap());
    }

    #[test]
    fn erb_rate_rejects_non_positive() {
        assert_eq!(
            erb_rate(0.0),
            Err(SpectrogramError::NonPositiveFrequency(0.0))
        );
        assert!(erb_rate(-3.0).is_err());
    }

    #[test]
    fn erb_rate_inverse_round_trips() {
        for f in [50.0, 440.0, 1000.0, 7992.0, 23976.0] {
            let back = erb_rate_to_hz(erb_rate(f).unwrap());
            assert_abs_diff_eq!(back, f, epsilon = 1e-6);
        }
    }

    #[test]
    fn audio_defaults_span_requested_range() {
        let bands = center_frequencies(32, 50.0, 24000.0 * 0.999).unwrap();
        assert_eq!(bands.len(), 32);
        assert_eq!(bands[0], 50.0);
        assert_eq!(bands[31], 23976.0);
        assert!(bands.windows(2).all(|w| w[0] < w[1]));
        assert!(bands.iter().all(|&f| f < 24000.0));
    }

    #[test]
    fn centres_are_uniform_on_erb_scale() {
        let bands = center_frequencies(21, 50.0, 7992.0).unwrap();
        let rates: Vec<f64> = bands.iter().map(|&f| erb_rate(f).unwrap()).collect();
        let step = rates[1] - rates[0];
        for w in rates.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], step, epsilon = 1e-9);
        }
    }

    #[test]
    fn invalid_band_ranges() {
        assert!(center_frequencies(1, 50.0, 8000.0).is_err());
        assert!(center_frequencies(10, 0.0, 8000.0).is_err());
        assert!(center_frequencies(10, 9000.0, 8000.0).is_err());
        assert!(GammatoneAnalyzer::new(16000, vec![100.0, 8000.0]).is_err());
        assert!(GammatoneAnalyzer::new(16000, vec![200.0, 100.0]).is_err());
    }

    #[test]
    fn frame_count_formula() {
        let layout = FrameLayout::for_rate(16000);
        assert_eq!(
            layout,
            FrameLayout {
                window: 1280,
                hop: 320
            }
        );
        assert_eq!(layout.n_frames(16000), 47);
        assert_eq!(layout.n_frames(1279), 0);
        assert_eq!(layout.n_frames(1280), 1);
        assert_eq!(
            FrameLayout::for_rate(48000),
            FrameLayout {
                window: 3840,
                hop: 960
            }
        );
    }

    #[test]
    fn silence_sits_on_the_floor() {
        let a = GammatoneAnalyzer::for_mode(Mode::Speech);
        let spec = a.analyze(&vec![0.0; 16000]).unwrap();
        assert_eq!(spec.n_frames(), 47);
        assert_eq!(spec.n_bands(), 21);
        let floor = 10.0 * POWER_FLOOR.log10();
        assert!(spec.values.as_slice().iter().all(|&v| v == floor));
        assert_abs_diff_eq!(floor, -200.0, epsilon = 1e-12);
    }

    #[test]
    fn tone_at_band_centre_wins_its_frame() {
        let a = GammatoneAnalyzer::for_mode(Mode::Speech);
        for band in [3usize, 10, 17] {
            let fc = a.center_freqs_hz()[band];
            let samples: Vec<f64> = (0..16000)
                .map(|i| 0.5 * (2.0 * std::f64::consts::PI * fc * i as f64 / 16000.0).sin())
                .collect();
            let spec = a.analyze(&samples).unwrap();
            for frame in 1..spec.n_frames() - 1 {
                let best = (0..spec.n_bands())
                    .max_by(|&x, &y| {
                        spec.values
                            .get(x, frame)
                            .total_cmp(&spec.values.get(y, frame))
                    })
                    .unwrap();
                assert_eq!(best, band, "frame {frame}");
            }
        }
    }

    #[test]
    fn full_scale_sine_is_near_minus_three_db() {
        let a = GammatoneAnalyzer::for_mode(Mode::Speech);
        let fc = a.center_freqs_hz()[12];
        let samples: Vec<f64> = (0..16000)
            .map(|i| (2.0 * std::f64::consts::PI * fc * i as f64 / 16000.0).sin())
            .collect();
        let spec = a.analyze(&samples).unwrap();
        let v = spec.values.get(12, 10);
        assert!((v + 3.01).abs() < 0.5, "got {v}");
    }
}
