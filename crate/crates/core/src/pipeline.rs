//! End-to-end comparison.
//!
//! global alignment -> gammatone spectrograms -> silence thresholds ->
//! (speech: VAD) -> patch segmentation -> patch alignment -> sub-patch
//! alignment -> NSIM aggregation -> MOS mapping.

use std::path::Path;

use rayon::prelude::*;

use crate::alignment::{
    align_patches, fine_align, global_align, segment_patches, PatchScoring, DEFAULT_PATCH_FRAMES,
    DEFAULT_SEARCH_FRAMES,
};
use crate::audio_io::{load_wav, prepare_pair, AudioError};
use crate::mos_mapping::{
    default_audio_model, MappingError, PolynomialMapping, QualityMapper, SvrModel, TrainingDataset,
};
use crate::similarity::{aggregate_nsim, threshold_pair, SimilarityError, ThresholdParams};
use crate::spectrogram::{GammatoneAnalyzer, HOP_S, WINDOW_S};
use crate::vad::voiced_frames;
use crate::{AudioSignal, Mode, Result, Warning};

/// Bumped whenever scores for the frozen golden set change.
pub const CONFORMANCE_VERSION: u32 = 1;

pub fn conformance_version() -> u32 {
    CONFORMANCE_VERSION
}

/// Which similarity-to-quality mapping to use.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum MappingChoice {
    /// Polynomial in speech mode, the shipped SVR in audio mode.
    #[default]
    ModeDefault,
    Polynomial(PolynomialMapping),
    Svr(SvrModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub mode: Mode,
    pub threshold: ThresholdParams,
    pub patch_frames: usize,
    pub search_frames: usize,
    pub mapping: MappingChoice,
    pub verbose: bool,
}

impl Config {
    pub fn for_mode(mode: Mode) -> Self {
        Self {
            mode,
            threshold: ThresholdParams::default(),
            patch_frames: DEFAULT_PATCH_FRAMES,
            search_frames: DEFAULT_SEARCH_FRAMES,
            mapping: MappingChoice::ModeDefault,
            verbose: false,
        }
    }

    pub fn speech() -> Self {
        Self::for_mode(Mode::Speech)
    }

    pub fn audio() -> Self {
        Self::for_mode(Mode::Audio)
    }

    pub fn mapper(&self) -> QualityMapper {
        match (&self.mapping, self.mode) {
            (MappingChoice::ModeDefault, Mode::Speech) => {
                QualityMapper::Polynomial(PolynomialMapping::default_speech())
            }
            (MappingChoice::ModeDefault, Mode::Audio) => {
                QualityMapper::Svr(default_audio_model().clone())
            }
            (MappingChoice::Polynomial(p), _) => QualityMapper::Polynomial(p.clone()),
            (MappingChoice::Svr(m), _) => QualityMapper::Svr(m.clone()),
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self::audio()
    }
}

/// Alignment and score of one patch pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDetail {
    pub ref_start_frame: usize,
    pub deg_start_frame: usize,
    pub frame_offset: isize,
    pub sample_lag: isize,
    pub mean_nsim: f64,
}

/// Similarity measurements before MOS mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityAnalysis {
    pub overall_nsim: f64,
    pub fvnsim: Vec<f64>,
    pub per_frame_nsim: Vec<f64>,
    pub patches: Vec<PatchDetail>,
    pub center_freqs_hz: Vec<f64>,
    pub global_lag_samples: isize,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityResult {
    pub mos: f64,
    pub overall_nsim: f64,
    pub fvnsim: Vec<f64>,
    pub per_frame_nsim: Vec<f64>,
    pub patches: Vec<PatchDetail>,
    pub center_freqs_hz: Vec<f64>,
    pub global_lag_samples: isize,
    pub mode: Mode,
    pub conformance_version: u32,
    pub warnings: Vec<Warning>,
}

/// Runs every stage up to and including NSIM aggregation.
pub fn analyze_pair(
    reference: &AudioSignal,
    degraded: &AudioSignal,
    cfg: &Config,
) -> Result<SimilarityAnalysis> {
    if reference.sample_rate_hz() != degraded.sample_rate_hz() {
        return Err(AudioError::SampleRateMismatch {
            reference: reference.sample_rate_hz(),
            degraded: degraded.sample_rate_hz(),
        }
        .into());
    }
    let required = cfg.mode.sample_rate_hz();
    if reference.sample_rate_hz() != required {
        return Err(AudioError::WrongModeRate {
            mode: cfg.mode,
            required,
            actual: reference.sample_rate_hz(),
        }
        .into());
    }
    if !cfg.threshold.is_valid() {
        return Err(MappingError::InvalidConfig(format!(
            "threshold parameters out of range: {:?}",
            cfg.threshold
        ))
        .into());
    }

    let mut warnings = Vec::new();
    let aligned = global_align(reference, degraded)?;
    if aligned.degenerate {
        warnings.push(Warning::DegenerateAlignment);
    }

    let analyzer = GammatoneAnalyzer::for_mode(cfg.mode);
    let ref_spec = analyzer.analyze(aligned.reference.samples())?;
    let deg_spec = analyzer.analyze(aligned.degraded.samples())?;
    let absolute_floor_db = cfg.threshold.absolute_floor(ref_spec.values.max());
    let (ref_spec, deg_spec) = threshold_pair(&ref_spec, &deg_spec, cfg.threshold)?;
    let hi = ref_spec.values.max().max(deg_spec.values.max());
    let lo = ref_spec.values.min().min(deg_spec.values.min());
    let scoring = PatchScoring {
        absolute_floor_db,
        rel_offset_db: cfg.threshold.rel_offset_db,
        dynamic_range: (hi - lo).max(f64::EPSILON),
    };

    let mask = if cfg.mode.uses_vad() {
        Some(voiced_frames(&aligned.reference, WINDOW_S, HOP_S)?)
    } else {
        None
    };
    let patches = segment_patches(&ref_spec, cfg.patch_frames, mask.as_ref())?;
    let pairs = align_patches(
        &patches,
        &ref_spec.values,
        &deg_spec.values,
        cfg.search_frames,
        scoring.dynamic_range,
    )?;
    let pairs = pairs
        .par_iter()
        .map(|pair| {
            fine_align(
                pair,
                &aligned.reference,
                &aligned.degraded,
                &analyzer,
                &scoring,
            )
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let nsim = aggregate_nsim(&pairs).map_err(|e: SimilarityError| crate::Error::from(e))?;
    let patches = pairs
        .iter()
        .map(|p| PatchDetail {
            ref_start_frame: p.ref_patch.start_frame,
            deg_start_frame: p.deg_patch.start_frame,
            frame_offset: p.frame_offset,
            sample_lag: p.sample_lag,
            mean_nsim: p.mean_nsim(),
        })
        .collect();

    Ok(SimilarityAnalysis {
        overall_nsim: nsim.overall,
        fvnsim: nsim.fvnsim,
        per_frame_nsim: nsim.per_frame,
        patches,
        center_freqs_hz: analyzer.center_freqs_hz().to_vec(),
        global_lag_samples: aligned.lag_samples,
        warnings,
    })
}

/// Scores `degraded` against `reference`. Identical inputs and configuration
/// always give bit-identical results, independent of thread count.
pub fn compare(
    reference: &AudioSignal,
    degraded: &AudioSignal,
    cfg: &Config,
) -> Result<QualityResult> {
    let analysis = analyze_pair(reference, degraded, cfg)?;
    let mapper = cfg.mapper();
    let nsim = crate::similarity::NsimResult {
        fvnsim: analysis.fvnsim.clone(),
        per_frame: Vec::new(),
        per_patch: Vec::new(),
        overall: analysis.overall_nsim,
    };
    let mos = mapper.mos(&nsim)?;
    Ok(QualityResult {
        mos,
        overall_nsim: analysis.overall_nsim,
        fvnsim: analysis.fvnsim,
        per_frame_nsim: analysis.per_frame_nsim,
        patches: analysis.patches,
        center_freqs_hz: analysis.center_freqs_hz,
        global_lag_samples: analysis.global_lag_samples,
        mode: cfg.mode,
        conformance_version: CONFORMANCE_VERSION,
        warnings: analysis.warnings,
    })
}

/// Loads, validates and scores a pair of WAV files.
pub fn compare_files(
    reference: impl AsRef<Path>,
    degraded: impl AsRef<Path>,
    cfg: &Config,
) -> Result<QualityResult> {
    let reference = load_wav(reference)?;
    let degraded = load_wav(degraded)?;
    let prepared = prepare_pair(reference, degraded, cfg.mode)?;
    let mut result = compare(&prepared.reference, &prepared.degraded, cfg)?;
    let mut warnings = prepared.warnings;
    warnings.append(&mut result.warnings);
    result.warnings = warnings;
    Ok(result)
}

/// Per-band NSIM for every row of a training set, in row order.
pub fn extract_features(dataset: &TrainingDataset, cfg: &Config) -> Result<Vec<Vec<f64>>> {
    dataset
        .rows
        .par_iter()
        .map(|row| {
            let reference = load_wav(&row.reference)?;
            let degraded = load_wav(&row.degraded)?;
            let prepared = prepare_pair(reference, degraded, cfg.mode)?;
            Ok(analyze_pair(&prepared.reference, &prepared.degraded, cfg)?.fvnsim)
        })
        .collect()
}
