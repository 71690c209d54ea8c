//! Similarity-to-quality mapping.
//!
//! Speech mode maps overall NSIM through a clamped monotone polynomial;
//! audio mode feeds the per-band NSIM vector to an RBF support vector
//! regressor. Both produce MOS on `[1, 5]`.

mod model_io;
mod polynomial;
mod svr;
mod training;

use std::path::PathBuf;
use std::sync::OnceLock;

pub use model_io::{
    load_model, load_model_file, save_model, save_model_file, MODEL_FORMAT_VERSION,
};
pub use polynomial::{
    fit_polynomial, PolynomialMapping, DEFAULT_SPEECH_ANCHORS, DEFAULT_SPEECH_COEFFICIENTS,
};
pub use svr::{rbf, SvrModel};
pub use training::{
    train_svr, CvReport, TrainedModel, TrainingConfig, TrainingDataset, TrainingRow,
    DEFAULT_EPSILON,
};

use crate::similarity::NsimResult;

pub const MOS_MIN: f64 = 1.0;
pub const MOS_MAX: f64 = 5.0;

/// Shipped audio-mode model, trained on synthetic degradations (see the
/// `gen-default-model` CLI command). Not calibrated against listening tests.
const DEFAULT_AUDIO_MODEL: &str = include_str!("default_audio_model.txt");

pub fn clamp_mos(value: f64) -> f64 {
    value.clamp(MOS_MIN, MOS_MAX)
}

#[derive(Debug, thiserror::Error)]
pub enum MappingError {
    #[error("feature dimension mismatch: model expects {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid polynomial mapping: {0}")]
    InvalidPolynomial(String),
    #[error("model format version {found} is not supported (expected {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("need at least {required} training rows, got {actual}")]
    InsufficientData { required: usize, actual: usize },
    #[error("row {row}: MOS {value} outside [1, 5]")]
    LabelOutOfRange { row: usize, value: f64 },
    #[error("training data: {0}")]
    MalformedDataset(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The default audio-mode regressor.
pub fn default_audio_model() -> &'static SvrModel {
    static MODEL: OnceLock<SvrModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        load_model(DEFAULT_AUDIO_MODEL.as_bytes()).expect("embedded default model parses")
    })
}

/// How NSIM is turned into MOS for one comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum QualityMapper {
    Polynomial(PolynomialMapping),
    Svr(SvrModel),
}

impl QualityMapper {
    pub fn mos(&self, nsim: &NsimResult) -> Result<f64, MappingError> {
        match self {
            QualityMapper::Polynomial(p) => Ok(p.mos(nsim.overall)),
            QualityMapper::Svr(model) => model.predict(&nsim.fvnsim),
        }
    }
}
