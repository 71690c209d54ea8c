use std::fmt;

/// Which flavour of the metric to run.
///
/// Speech mode works on 16 kHz wideband speech, gates patches with a voice
/// activity detector and maps overall NSIM through a polynomial. Audio mode
/// works on 48 kHz full-band material and maps the per-band NSIM vector
/// through a support vector regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    Speech,
    #[default]
    Audio,
}

impl Mode {
    pub fn sample_rate_hz(self) -> u32 {
        match self {
            Mode::Speech => 16_000,
            Mode::Audio => 48_000,
        }
    }

    pub fn n_bands(self) -> usize {
        match self {
            Mode::Speech => 21,
            Mode::Audio => 32,
        }
    }

    /// Lowest and highest band centre in Hz.
    pub fn band_range_hz(self) -> (f64, f64) {
        let nyquist = f64::from(self.sample_rate_hz()) / 2.0;
        (50.0, nyquist * 0.999)
    }

    pub fn uses_vad(self) -> bool {
        matches!(self, Mode::Speech)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Speech => f.write_str("speech"),
            Mode::Audio => f.write_str("audio"),
        }
    }
}
