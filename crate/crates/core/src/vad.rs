//! Energy-based voice activity detection on the reference signal.

use crate::spectrogram::{FrameLayout, SpectrogramError};
use crate::AudioSignal;

/// Frames quieter than this (relative to the loudest frame) are unvoiced.
pub const RELATIVE_THRESHOLD_DB: f64 = 40.0;
/// Frames below this absolute level are unvoiced.
pub const ABSOLUTE_FLOOR_DBFS: f64 = -70.0;
/// Minimum voiced fraction for a speech-mode patch to be kept.
pub const MIN_VOICED_FRACTION: f64 = 0.5;

/// One flag per spectrogram frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoiceActivityMask {
    pub voiced: Vec<bool>,
}

impl VoiceActivityMask {
    pub fn len(&self) -> usize {
        self.voiced.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voiced.is_empty()
    }

    /// Fraction of voiced frames in `[start, start + len)`.
    pub fn voiced_fraction(&self, start: usize, len: usize) -> f64 {
        let voiced = self.voiced[start..start + len]
            .iter()
            .filter(|&&v| v)
            .count();
        voiced as f64 / len as f64
    }
}

/// RMS level of each frame in dBFS (`20 log10(rms)`, `-inf` for silence).
pub fn frame_levels_dbfs(samples: &[f64], layout: FrameLayout) -> Vec<f64> {
    (0..layout.n_frames(samples.len()))
        .map(|frame| {
            let start = layout.frame_start(frame);
            let chunk = &samples[start..start + layout.window];
            let mean_sq = chunk.iter().map(|s| s * s).sum::<f64>() / chunk.len() as f64;
            10.0 * mean_sq.log10()
        })
        .collect()
}

/// Marks a frame voiced when its RMS is within 40 dB of the loudest frame
/// and above -70 dBFS. Framing matches the spectrogram for the same window
/// and hop.
pub fn voiced_frames(
    reference: &AudioSignal,
    window_s: f64,
    hop_s: f64,
) -> Result<VoiceActivityMask, SpectrogramError> {
    let rate = f64::from(reference.sample_rate_hz());
    let layout = FrameLayout {
        window: (window_s * rate).round() as usize,
        hop: (hop_s * rate).round() as usize,
    };
    let levels = frame_levels_dbfs(reference.samples(), layout);
    if levels.is_empty() {
        return Err(SpectrogramError::SignalTooShort {
            samples: reference.len(),
            window: layout.window,
        });
    }
    let loudest = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let voiced = levels
        .iter()
        .map(|&db| db > ABSOLUTE_FLOOR_DBFS && db >= loudest - RELATIVE_THRESHOLD_DB)
        .collect();
    Ok(VoiceActivityMask { voiced })
}
