//! Deterministic test signals and degradations.
//!
//! All randomness comes from ChaCha8 seeded with an explicit `u64`, so a
//! given (generator, seed) pair yields the same samples on every run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlannerScalar;

use rayon::prelude::*;

use crate::audio_io::{write_wav_f32, AudioError};
use crate::mos_mapping::{clamp_mos, train_svr, TrainedModel, TrainingConfig};
use crate::pipeline::{analyze_pair, Config};
use crate::{AudioSignal, Mode};

/// Seed used by the shipped fixture set and the golden conformance suite.
pub const FIXTURE_SEED: u64 = 0x6e73_696d_7100_0001;

/// Peak level of generated program material.
const PROGRAM_PEAK: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("invalid degradation: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// One reproducible degradation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegradationSpec {
    /// Prepend this many zeros, keeping the original length.
    Delay {
        samples: usize,
    },
    /// Additive white Gaussian noise at this SNR, measured over the whole signal.
    Awgn {
        snr_db: f64,
    },
    /// Zero-phase low-pass with a short raised-cosine transition centred on the cutoff.
    Lowpass {
        cutoff_hz: f64,
    },
    Gain {
        db: f64,
    },
}

impl DegradationSpec {
    pub fn validate(&self, signal: &AudioSignal) -> Result<(), FixtureError> {
        let nyquist = signal.sample_rate_hz() as f64 / 2.0;
        match *self {
            DegradationSpec::Delay { samples } if samples >= signal.len() => {
                Err(FixtureError::InvalidSpec(format!(
                    "delay of {samples} samples swallows a {}-sample signal",
                    signal.len()
                )))
            }
            DegradationSpec::Awgn { snr_db } if !snr_db.is_finite() => {
                Err(FixtureError::InvalidSpec(format!("SNR {snr_db} dB")))
            }
            DegradationSpec::Lowpass { cutoff_hz } if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) => {
                Err(FixtureError::InvalidSpec(format!(
                    "cutoff {cutoff_hz} Hz outside (0, {nyquist}) Hz"
                )))
            }
            DegradationSpec::Gain { db } if !db.is_finite() => {
                Err(FixtureError::InvalidSpec(format!("gain {db} dB")))
            }
            _ => Ok(()),
        }
    }

    /// Short label used in fixture file names.
    pub fn label(&self) -> String {
        match *self {
            DegradationSpec::Delay { samples } => format!("delay{samples}"),
            DegradationSpec::Awgn { snr_db } => format!("awgn{snr_db}db"),
            DegradationSpec::Lowpass { cutoff_hz } => format!("lp{cutoff_hz}hz"),
            DegradationSpec::Gain { db } => format!("gain{db}db"),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Applies `spec` to `signal`. Output length always equals input length.
pub fn apply(
    signal: &AudioSignal,
    spec: DegradationSpec,
    seed: u64,
) -> Result<AudioSignal, FixtureError> {
    spec.validate(signal)?;
    let rate = signal.sample_rate_hz();
    let x = signal.samples();
    let out = match spec {
        DegradationSpec::Delay { samples } => {
            let mut out = vec![0.0; x.len()];
            out[samples..].copy_from_slice(&x[..x.len() - samples]);
            out
        }
        DegradationSpec::Awgn { snr_db } => {
            let ps = power(x);
            if ps == 0.0 {
                return Err(FixtureError::InvalidSpec(
                    "SNR is undefined for a silent signal".into(),
                ));
            }
            let noise = gaussian(x.len(), seed);
            let scale = (ps / (10f64.powf(snr_db / 10.0) * power(&noise))).sqrt();
            x.iter().zip(&noise).map(|(s, n)| s + scale * n).collect()
        }
        DegradationSpec::Lowpass { cutoff_hz } => lowpass(x, rate, cutoff_hz),
        DegradationSpec::Gain { db } => {
            let g = 10f64.powf(db / 20.0);
            x.iter().map(|s| s * g).collect()
        }
    };
    Ok(AudioSignal::new(out, rate)?)
}

fn lowpass(x: &[f64], rate: u32, cutoff_hz: f64) -> Vec<f64> {
    let n = (2 * x.len()).next_power_of_two();
    let mut planner = FftPlannerScalar::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    fwd.process(&mut buf);

    let width = (0.1 * cutoff_hz).min(500.0);
    let (lo, hi) = (cutoff_hz - width / 2.0, cutoff_hz + width / 2.0);
    let bin_hz = rate as f64 / n as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * bin_hz;
        let g = if f <= lo {
            1.0
        } else if f >= hi {
            0.0
        } else {
            0.5 * (1.0 + (PI * (f - lo) / width).cos())
        };
        *c *= g;
    }
    inv.process(&mut buf);
    buf[..x.len()].iter().map(|c| c.re / n as f64).collect()
}

fn normalize_peak(mut x: Vec<f64>, peak: f64) -> Vec<f64> {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        let g = peak / max;
        x.iter_mut().for_each(|v| *v *= g);
    }
    x
}

fn n_samples(duration_s: f64, rate: u32) -> usize {
    (duration_s * rate as f64).round() as usize
}

/// Sum of equal-amplitude sines, each starting at zero phase.
pub fn multitone(freqs_hz: &[f64], amplitude: f64, duration_s: f64, rate: u32) -> AudioSignal {
    let n = n_samples(duration_s, rate);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            amplitude
                * freqs_hz
                    .iter()
                    .map(|f| (2.0 * PI * f * t).sin())
                    .sum::<f64>()
        })
        .collect();
    AudioSignal::new(samples, rate).expect("non-empty fixture")
}

pub fn sine(freq_hz: f64, amplitude: f64, duration_s: f64, rate: u32) -> AudioSignal {
    multitone(&[freq_hz], amplitude, duration_s, rate)
}

/// Linear frequency sweep.
pub fn chirp(f0_hz: f64, f1_hz: f64, amplitude: f64, duration_s: f64, rate: u32) -> AudioSignal {
    let n = n_samples(duration_s, rate);
    let k = (f1_hz - f0_hz) / duration_s;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            amplitude * (2.0 * PI * (f0_hz * t + 0.5 * k * t * t)).sin()
        })
        .collect();
    AudioSignal::new(samples, rate).expect("non-empty fixture")
}

/// Gaussian white noise with the given RMS level.
pub fn white_noise(rms_dbfs: f64, duration_s: f64, rate: u32, seed: u64) -> AudioSignal {
    let n = n_samples(duration_s, rate);
    let g = 10f64.powf(rms_dbfs / 20.0);
    let samples = gaussian(n, seed).into_iter().map(|v| v * g).collect();
    AudioSignal::new(samples, rate).expect("non-empty fixture")
}

/// Formant resonance weight.
fn resonance(f: f64, centre: f64, bandwidth: f64) -> f64 {
    1.0 / (1.0 + ((f - centre) / bandwidth).powi(2))
}

/// Voiced syllables with gliding pitch and random formants, separated by
/// short silent gaps. Some syllables carry a fricative noise burst.
pub fn speech_like(duration_s: f64, rate: u32, seed: u64) -> AudioSignal {
    let n = n_samples(duration_s, rate);
    let fs = rate as f64;
    let top = (0.45 * fs).min(10_000.0);
    let mut rng = rng(seed);
    let mut out = vec![0.0; n];
    let mut pos = n_samples(rng.random_range(0.05..0.2), rate);

    while pos < n {
        let len = n_samples(rng.random_range(0.12..0.28), rate).min(n - pos);
        let f0_start: f64 = rng.random_range(100.0..220.0);
        let f0_end = f0_start * rng.random_range(0.8..1.25);
        let formants = [
            (rng.random_range(300.0..900.0), 80.0),
            (rng.random_range(900.0..2500.0), 120.0),
            (rng.random_range(2400.0..3500.0), 200.0),
        ];
        let level: f64 = rng.random_range(0.4..1.0);
        let fricative = rng.random_bool(0.3);
        let noise_seed: u64 = rng.random();

        let n_harm = (top / f0_start.min(f0_end)).floor() as usize;
        let weights = |f: f64| -> f64 {
            formants
                .iter()
                .map(|&(c, b)| resonance(f, c, b))
                .sum::<f64>()
                + 0.02
        };
        let mut phase = 0.0f64;
        let noise = if fricative {
            gaussian(len + 1, noise_seed)
        } else {
            Vec::new()
        };
        for i in 0..len {
            let frac = i as f64 / len as f64;
            let f0 = f0_start + (f0_end - f0_start) * frac;
            phase += 2.0 * PI * f0 / fs;
            let env = (PI * frac).sin().powi(2);
            let mut v = 0.0;
            for k in 1..=n_harm {
                let f = k as f64 * f0;
                if f >= top {
                    break;
                }
                v += weights(f) * (k as f64 * phase).sin() / (k as f64).sqrt();
            }
            if fricative {
                // First difference tilts the burst towards high frequencies.
                v += 0.6 * (noise[i + 1] - noise[i]) * frac;
            }
            out[pos + i] += level * env * v;
        }
        pos += len + n_samples(rng.random_range(0.04..0.15), rate);
    }
    AudioSignal::new(normalize_peak(out, PROGRAM_PEAK), rate).expect("non-empty fixture")
}

/// Harmonic notes in two voices plus short broadband percussion hits.
/// Harmonics extend close to Nyquist.
pub fn music_like(duration_s: f64, rate: u32, seed: u64) -> AudioSignal {
    let n = n_samples(duration_s, rate);
    let fs = rate as f64;
    let top = 0.45 * fs;
    let mut rng = rng(seed);
    let mut out = vec![0.0; n];

    for voice in 0..2 {
        let mut pos = 0usize;
        let (lo, hi) = if voice == 0 {
            (110.0, 330.0)
        } else {
            (330.0, 990.0)
        };
        while pos < n {
            let len = n_samples(rng.random_range(0.2..0.6), rate).min(n - pos);
            let f0: f64 = rng.random_range(lo..hi);
            let rolloff: f64 = rng.random_range(0.6..1.0);
            let level: f64 = rng.random_range(0.5..1.0);
            let n_harm = (top / f0).floor() as usize;
            let attack = n_samples(0.01, rate).max(1);
            for i in 0..len {
                let t = i as f64 / fs;
                let env = (i as f64 / attack as f64).min(1.0)
                    * (-3.0 * t).exp()
                    * (1.0 - i as f64 / len as f64).min(1.0);
                let mut v = 0.0;
                for k in 1..=n_harm {
                    v += (2.0 * PI * k as f64 * f0 * t).sin() / (k as f64).powf(rolloff);
                }
                out[pos + i] += level * env * v;
            }
            pos += len;
        }
    }

    let hit_len = n_samples(0.06, rate);
    let mut pos = 0usize;
    while pos < n {
        let noise = gaussian(hit_len.min(n - pos), rng.random());
        for (i, v) in noise.iter().enumerate() {
            let env = (-(i as f64) / (0.012 * fs)).exp();
            out[pos + i] += 1.5 * env * v;
        }
        pos += n_samples(rng.random_range(0.2..0.4), rate);
    }
    AudioSignal::new(normalize_peak(out, PROGRAM_PEAK), rate).expect("non-empty fixture")
}

/// Loud programme material (a strong 440 Hz tone under a music bed)
/// interleaved with stretches of near-digital silence, i.e. dither at
/// -110 dBFS RMS. Loud spans are 0-2 s and 4-6 s.
pub fn silence_reference(rate: u32, seed: u64) -> AudioSignal {
    let bed = normalize_peak(music_like(4.0, rate, seed).into_samples(), 0.15);
    let tone = sine(440.0, 0.8, 4.0, rate);
    let program: Vec<f64> = bed.iter().zip(tone.samples()).map(|(b, t)| b + t).collect();
    let seg = |s: f64| n_samples(s, rate);
    let mut out = white_noise(-110.0, 6.0, rate, seed ^ 0x5a5a).into_samples();
    for (dst, src) in [(0.0, 0.0), (4.0, 2.0)] {
        out[seg(dst)..seg(dst + 2.0)]
            .iter_mut()
            .zip(&program[seg(src)..seg(src + 2.0)])
            .for_each(|(o, v)| *o += v);
    }
    AudioSignal::new(out, rate).expect("non-empty fixture")
}

/// The silence-sensitivity case: [`silence_reference`] against itself plus
/// white noise. `noise_dbfs` follows the AES17 convention, so 0 dBFS is the
/// RMS of a full-scale sine.
pub fn silence_pair(rate: u32, noise_dbfs: f64, seed: u64) -> (AudioSignal, AudioSignal) {
    let reference = silence_reference(rate, seed);
    let rms_dbfs = noise_dbfs - 10.0 * 2f64.log10();
    let noise = white_noise(rms_dbfs, reference.duration_s(), rate, seed ^ 0xa5a5);
    let degraded = reference
        .samples()
        .iter()
        .zip(noise.samples())
        .map(|(r, n)| r + n)
        .collect();
    let degraded = AudioSignal::new(degraded, rate).expect("non-empty fixture");
    (reference, degraded)
}

/// A named fixture signal.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub signal: AudioSignal,
}

/// Ten varied signals at the mode's sample rate.
pub fn standard_fixtures(mode: Mode) -> Vec<Fixture> {
    let rate = mode.sample_rate_hz();
    let top = if mode == Mode::Speech {
        7_000.0
    } else {
        20_000.0
    };
    let s = FIXTURE_SEED;
    let mut mixed = speech_like(4.0, rate, s + 7).into_samples();
    let bed = white_noise(-45.0, 4.0, rate, s + 8);
    mixed
        .iter_mut()
        .zip(bed.samples())
        .for_each(|(m, b)| *m += b);
    let list = [
        ("speech_a", speech_like(4.0, rate, s)),
        ("speech_b", speech_like(6.0, rate, s + 1)),
        ("speech_c", speech_like(3.0, rate, s + 2)),
        ("music_a", music_like(4.0, rate, s + 3)),
        ("music_b", music_like(5.0, rate, s + 4)),
        ("tone_1k", sine(1_000.0, 0.3, 3.0, rate)),
        (
            "multitone",
            multitone(&[220.0, 1_250.0, 3_100.0, 0.8 * top], 0.1, 3.0, rate),
        ),
        ("chirp", chirp(100.0, top, 0.3, 4.0, rate)),
        ("white_noise", white_noise(-20.0, 3.0, rate, s + 5)),
        (
            "speech_in_noise",
            AudioSignal::new(mixed, rate).expect("non-empty fixture"),
        ),
    ];
    list.into_iter()
        .map(|(name, signal)| Fixture {
            name: name.to_string(),
            signal,
        })
        .collect()
}

/// Writes the standard fixtures of both modes, plus a graded set of
/// degradations of each programme fixture, as 32-bit float WAVs.
pub fn write_test_data(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, FixtureError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| {
        FixtureError::Audio(AudioError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })?;
    let mut written = Vec::new();
    for mode in [Mode::Speech, Mode::Audio] {
        for fx in standard_fixtures(mode) {
            let stem = format!("{}_{}", mode, fx.name);
            let path = dir.join(format!("{stem}.wav"));
            write_wav_f32(&path, &fx.signal)?;
            written.push(path);
            if !(fx.name.starts_with("speech") || fx.name.starts_with("music")) {
                continue;
            }
            for spec in graded_degradations(mode) {
                let degraded = apply(&fx.signal, spec, FIXTURE_SEED)?;
                let path = dir.join(format!("{stem}_{}.wav", spec.label()));
                write_wav_f32(&path, &degraded)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Noise and band-limiting ladders used for severity checks.
pub fn graded_degradations(mode: Mode) -> Vec<DegradationSpec> {
    let mut specs: Vec<DegradationSpec> = [40.0, 30.0, 20.0, 10.0, 0.0]
        .into_iter()
        .map(|snr_db| DegradationSpec::Awgn { snr_db })
        .collect();
    let cutoffs: &[f64] = match mode {
        Mode::Speech => &[6_000.0, 4_000.0, 2_000.0, 1_000.0],
        Mode::Audio => &[12_000.0, 8_000.0, 4_000.0, 2_000.0],
    };
    specs.extend(
        cutoffs
            .iter()
            .map(|&cutoff_hz| DegradationSpec::Lowpass { cutoff_hz }),
    );
    specs
}

/// Seeds for the default-model training material. Disjoint from
/// [`FIXTURE_SEED`] so the acceptance fixtures are never training rows.
pub const TRAINING_SEEDS: [u64; 3] = [0x7261_696e_0001, 0x7261_696e_0002, 0x7261_696e_0003];

/// Label used for synthetic training rows: a smooth, increasing function
/// of mean per-band NSIM, 5.0 at identity.
pub fn heuristic_mos(mean_fvnsim: f64) -> f64 {
    clamp_mos(1.0 + 4.0 * (-3.0 * (1.0 - mean_fvnsim)).exp())
}

/// A degraded copy of a programme signal, for training.
#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub name: String,
    pub reference: AudioSignal,
    pub degraded: AudioSignal,
}

/// Programme signals at graded noise, band-limiting and delay+noise
/// severities, plus the unmodified signals.
pub fn synthetic_pairs(mode: Mode, seeds: &[u64]) -> Result<Vec<SyntheticPair>, FixtureError> {
    let rate = mode.sample_rate_hz();
    let nyquist = rate as f64 / 2.0;
    let mut out = Vec::new();
    for &seed in seeds {
        let programmes = [
            ("speech", speech_like(4.0, rate, seed)),
            ("music", music_like(4.0, rate, seed)),
        ];
        for (kind, x) in programmes {
            let mut specs = vec![vec![]];
            for snr_db in [
                50.0, 40.0, 35.0, 30.0, 25.0, 20.0, 15.0, 10.0, 5.0, 0.0, -5.0,
            ] {
                specs.push(vec![DegradationSpec::Awgn { snr_db }]);
            }
            for frac in [0.85, 0.65, 0.5, 0.33, 0.25, 0.17, 0.12, 0.08] {
                specs.push(vec![DegradationSpec::Lowpass {
                    cutoff_hz: frac * nyquist,
                }]);
            }
            for (samples, snr_db) in [(100, 35.0), (1000, 20.0), (300, 5.0)] {
                specs.push(vec![
                    DegradationSpec::Delay { samples },
                    DegradationSpec::Awgn { snr_db },
                ]);
            }
            for (frac, snr_db) in [(0.5, 30.0), (0.25, 15.0)] {
                specs.push(vec![
                    DegradationSpec::Lowpass {
                        cutoff_hz: frac * nyquist,
                    },
                    DegradationSpec::Awgn { snr_db },
                ]);
            }
            for chain in specs {
                let mut y = x.clone();
                let mut label = format!("{kind}_{seed:x}");
                for (i, spec) in chain.iter().enumerate() {
                    y = apply(&y, *spec, seed.wrapping_add(i as u64))?;
                    label.push('_');
                    label.push_str(&spec.label());
                }
                out.push(SyntheticPair {
                    name: label,
                    reference: x.clone(),
                    degraded: y,
                });
            }
        }
    }
    Ok(out)
}

/// Feature rows and heuristic labels for the shipped audio model. Besides
/// the measured pairs, rows on the diagonal `t * 1` pin the model to
/// increase along it.
pub fn default_model_training_data() -> crate::Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mode = Mode::Audio;
    let cfg = Config::for_mode(mode);
    let pairs = synthetic_pairs(mode, &TRAINING_SEEDS)?;
    let mut features = pairs
        .par_iter()
        .map(|p| analyze_pair(&p.reference, &p.degraded, &cfg).map(|a| a.fvnsim))
        .collect::<crate::Result<Vec<_>>>()?;
    let dim = mode.n_bands();
    for i in 0..=30 {
        features.push(vec![-0.5 + 0.05 * i as f64; dim]);
    }
    let labels = features
        .iter()
        .map(|f| heuristic_mos(f.iter().sum::<f64>() / f.len() as f64))
        .collect();
    Ok((features, labels))
}

/// Regenerates the shipped audio-mode model.
pub fn train_default_audio_model() -> crate::Result<TrainedModel> {
    let (features, labels) = default_model_training_data()?;
    let cfg = TrainingConfig {
        conformance_tag: "synthetic-default-v1 (not calibrated to listening tests)".into(),
        ..TrainingConfig::default()
    };
    Ok(train_svr(&features, &labels, &cfg)?)
}

/// The 40-pair training-check set: two speech-like and two music-like
/// programmes, each under five noise levels and five low-pass cutoffs.
pub fn cv_check_pairs(mode: Mode) -> Result<Vec<SyntheticPair>, FixtureError> {
    let rate = mode.sample_rate_hz();
    let nyquist = rate as f64 / 2.0;
    let mut specs: Vec<DegradationSpec> = [40.0, 30.0, 20.0, 10.0, 0.0]
        .into_iter()
        .map(|snr_db| DegradationSpec::Awgn { snr_db })
        .collect();
    specs.extend(
        [0.75, 0.5, 0.33, 0.17, 0.08]
            .into_iter()
            .map(|f| DegradationSpec::Lowpass {
                cutoff_hz: f * nyquist,
            }),
    );
    let mut out = Vec::new();
    for (i, seed) in [0xc0ffee_u64, 0xbeef].into_iter().enumerate() {
        let programmes = [
            (format!("speech{i}"), speech_like(4.0, rate, seed)),
            (format!("music{i}"), music_like(4.0, rate, seed)),
        ];
        for (name, x) in programmes {
            for spec in &specs {
                out.push(SyntheticPair {
                    name: format!("{name}_{}", spec.label()),
                    degraded: apply(&x, *spec, seed)?,
                    reference: x.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Label for [`cv_check_pairs`]: linear in mean per-band NSIM.
pub fn linear_mos(mean_fvnsim: f64) -> f64 {
    clamp_mos(1.0 + 4.0 * mean_fvnsim)
}

/// One frozen (reference, degraded) pair of the conformance set.
#[derive(Debug, Clone)]
pub struct GoldenCase {
    pub name: String,
    pub mode: Mode,
    pub reference: AudioSignal,
    pub degraded: AudioSignal,
}

/// The frozen conformance set: 13 pairs over both modes.
pub fn golden_cases() -> Result<Vec<GoldenCase>, FixtureError> {
    use DegradationSpec::*;
    let speech: &[(&str, &[DegradationSpec])] = &[
        ("speech_a", &[]),
        ("speech_a", &[Awgn { snr_db: 20.0 }]),
        ("speech_a", &[Lowpass { cutoff_hz: 2_000.0 }]),
        ("speech_a", &[Delay { samples: 160 }]),
        ("speech_a", &[Gain { db: -6.0 }]),
        ("music_a", &[Awgn { snr_db: 10.0 }]),
    ];
    let audio: &[(&str, &[DegradationSpec])] = &[
        ("music_a", &[]),
        ("music_a", &[Awgn { snr_db: 30.0 }]),
        ("music_a", &[Lowpass { cutoff_hz: 8_000.0 }]),
        (
            "music_a",
            &[Delay { samples: 1_000 }, Awgn { snr_db: 20.0 }],
        ),
        ("speech_b", &[Awgn { snr_db: 10.0 }]),
        ("speech_b", &[Lowpass { cutoff_hz: 4_000.0 }]),
    ];
    let mut out = Vec::new();
    for (mode, table) in [(Mode::Speech, speech), (Mode::Audio, audio)] {
        let set = standard_fixtures(mode);
        for (source, chain) in table {
            let reference = set
                .iter()
                .find(|f| f.name == *source)
                .expect("fixture exists")
                .signal
                .clone();
            let mut degraded = reference.clone();
            let mut name = format!("{mode}/{source}");
            for spec in *chain {
                degraded = apply(&degraded, *spec, FIXTURE_SEED)?;
                name.push('/');
                name.push_str(&spec.label());
            }
            if chain.is_empty() {
                name.push_str("/identity");
            }
            out.push(GoldenCase {
                name,
                mode,
                reference,
                degraded,
            });
        }
    }
    let (reference, degraded) = silence_pair(Mode::Audio.sample_rate_hz(), -75.0, FIXTURE_SEED);
    out.push(GoldenCase {
        name: "audio/silence/noise-75dbfs".into(),
        mode: Mode::Audio,
        reference,
        degraded,
    });
    Ok(out)
}

/// Scores every [`golden_cases`] pair with default settings and renders
/// the results as text: a version header, then one line per case with the
/// MOS and per-band NSIM as f64 bit patterns.
pub fn golden_report() -> crate::Result<String> {
    use std::fmt::Write as _;
    let mut out = format!("conformance_version {}\n", crate::conformance_version());
    for case in golden_cases()? {
        let r = crate::compare(
            &case.reference,
            &case.degraded,
            &Config::for_mode(case.mode),
        )?;
        let bands: Vec<String> = r
            .fvnsim
            .iter()
            .map(|v| format!("{:016x}", v.to_bits()))
            .collect();
        writeln!(
            out,
            "{} mos={:016x} ({:.6}) fvnsim={}",
            case.name,
            r.mos.to_bits(),
            r.mos,
            bands.join(",")
        )
        .expect("writing to a String");
    }
    Ok(out)
}
