//! Full-reference audio and speech quality estimation.
//!
//! A clean reference and a degraded recording are globally aligned, turned
//! into gammatone (ERB-scale) spectrograms, floored with silence thresholds,
//! cut into half-second patches, aligned patch by patch (and then at sample
//! resolution), and compared with the neurogram similarity index (NSIM).
//! The resulting similarity is mapped to an estimated mean opinion score
//! (MOS-LQO) either by a polynomial (speech mode) or by a support vector
//! regressor over per-band similarities (audio mode).
//!
//! ```no_run
//! use nsimq::{audio_io, pipeline::{compare, Config}, Mode};
//!
//! let reference = audio_io::load_wav("ref.wav").unwrap();
//! let degraded = audio_io::load_wav("deg.wav").unwrap();
//! let result = compare(&reference, &degraded, &Config::for_mode(Mode::Audio)).unwrap();
//! println!("MOS-LQO: {:.5}", result.mos);
//! ```

pub mod alignment;
pub mod audio_io;
pub mod fixtures;
pub mod matrix;
pub mod mos_mapping;
pub mod pipeline;
pub mod similarity;
pub mod spectrogram;
pub mod vad;

mod mode;
mod warning;
mod xcorr;

pub use audio_io::AudioSignal;
pub use matrix::Matrix;
pub use mode::Mode;
pub use pipeline::{compare, conformance_version, Config, QualityResult};
pub use warning::Warning;

/// Crate-level error, wrapping the error type of each stage.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Audio(#[from] audio_io::AudioError),
    #[error(transparent)]
    Spectrogram(#[from] spectrogram::SpectrogramError),
    #[error(transparent)]
    Alignment(#[from] alignment::AlignmentError),
    #[error(transparent)]
    Similarity(#[from] similarity::SimilarityError),
    #[error(transparent)]
    Mapping(#[from] mos_mapping::MappingError),
    #[error(transparent)]
    Fixture(#[from] fixtures::FixtureError),
}

impl Error {
    /// True for failures caused by reading files rather than by their content.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Audio(audio_io::AudioError::Io { .. })
                | Error::Audio(audio_io::AudioError::MalformedFile { .. })
                | Error::Mapping(mos_mapping::MappingError::Io { .. })
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
