//! WAV decoding and reference/degraded pairing rules.

use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use log::warn;

use crate::alignment::DEFAULT_PATCH_FRAMES;
use crate::spectrogram::FrameLayout;
use crate::{Mode, Warning};

/// Recommended duration bounds for each input, in seconds.
pub const RECOMMENDED_DURATION_S: (f64, f64) = (3.0, 10.0);

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed WAV file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },
    #[error("unsupported WAV encoding in {path}: {reason}")]
    UnsupportedEncoding { path: PathBuf, reason: String },
    #[error("{0} contains no samples")]
    EmptyAudio(String),
    #[error("sample rates differ: reference {reference} Hz, degraded {degraded} Hz")]
    SampleRateMismatch { reference: u32, degraded: u32 },
    #[error("{mode} mode requires {required} Hz audio, got {actual} Hz")]
    WrongModeRate {
        mode: Mode,
        required: u32,
        actual: u32,
    },
    #[error("{signal} signal has {samples} samples; at least {required} are needed for one patch")]
    DurationTooShort {
        signal: &'static str,
        samples: usize,
        required: usize,
    },
    #[error("cannot write {path}: {reason}")]
    Write { path: PathBuf, reason: String },
}

/// Mono audio normalized to `[-1.0, 1.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioSignal {
    /// Wraps samples, clamping them into `[-1.0, 1.0]`.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, AudioError> {
        if samples.is_empty() {
            return Err(AudioError::EmptyAudio("signal".into()));
        }
        assert!(sample_rate_hz > 0, "sample rate must be positive");
        let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

fn malformed(path: &Path, err: impl ToString) -> AudioError {
    AudioError::MalformedFile {
        path: path.to_path_buf(),
        reason: err.to_string(),
    }
}

/// Format tag of the first `fmt ` chunk, if the RIFF structure gets that far.
fn fmt_tag(bytes: &[u8]) -> Option<u16> {
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return None;
    }
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().ok()?) as usize;
        if id == b"fmt " {
            let tag = bytes.get(pos + 8..pos + 10)?;
            return Some(u16::from_le_bytes([tag[0], tag[1]]));
        }
        pos = pos.checked_add(8 + len + (len & 1))?;
    }
    None
}

fn map_hound(path: &Path, err: hound::Error) -> AudioError {
    match err {
        // The bytes are already in memory, so a read error means truncation.
        hound::Error::IoError(source) => malformed(path, format!("truncated: {source}")),
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            path: path.to_path_buf(),
            reason: "compressed or otherwise unsupported sample format".into(),
        },
        other => malformed(path, other),
    }
}

/// Decodes a PCM16/24/32 or float32 WAV file into a mono signal.
///
/// Integer samples are divided by the format's maximum magnitude
/// (`2^(bits-1)`); multi-channel audio is averaged across channels.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioSignal, AudioError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    // hound validates block layout before looking at the tag, which turns
    // 4-bit ADPCM and similar into format errors.
    if let Some(tag) = fmt_tag(&bytes) {
        if !matches!(tag, 0x0001 | 0x0003 | 0xfffe) {
            return Err(AudioError::UnsupportedEncoding {
                path: path.to_path_buf(),
                reason: format!("format tag {tag:#06x} (compressed)"),
            });
        }
    }
    let reader = WavReader::new(std::io::Cursor::new(bytes)).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(malformed(path, "zero channels"));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 2f64.powi(i32::from(bits) - 1);
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (format, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                path: path.to_path_buf(),
                reason: format!("{bits}-bit {format:?} samples"),
            })
        }
    };

    if !interleaved.len().is_multiple_of(channels) {
        return Err(malformed(path, "partial sample frame at end of data"));
    }
    if interleaved.is_empty() {
        return Err(AudioError::EmptyAudio(path.display().to_string()));
    }

    let samples = downmix(&interleaved, channels);
    AudioSignal::new(samples, spec.sample_rate)
}

/// Averages interleaved channels into one.
pub fn downmix(interleaved: &[f64], channels: usize) -> Vec<f64> {
    if channels == 1 {
        return interleaved.to_vec();
    }
    interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect()
}

/// Writes a mono signal as 16-bit PCM.
pub fn write_wav_pcm16(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<(), AudioError> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let write_err = |e: hound::Error| AudioError::Write {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut writer = WavWriter::create(path, spec).map_err(write_err)?;
    for &s in &signal.samples {
        writer.write_sample(pcm16_from_f64(s)).map_err(write_err)?;
    }
    writer.finalize().map_err(write_err)
}

/// Writes a mono signal as 32-bit float.
pub fn write_wav_f32(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<(), AudioError> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let write_err = |e: hound::Error| AudioError::Write {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut writer = WavWriter::create(path, spec).map_err(write_err)?;
    for &s in &signal.samples {
        writer.write_sample(s as f32).map_err(write_err)?;
    }
    writer.finalize().map_err(write_err)
}

fn pcm16_from_f64(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// A validated reference/degraded pair plus any non-fatal findings.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub reference: AudioSignal,
    pub degraded: AudioSignal,
    pub warnings: Vec<Warning>,
}

/// Checks that a pair can be scored in `mode`. No resampling or gain
/// adjustment is ever applied.
pub fn prepare_pair(
    reference: AudioSignal,
    degraded: AudioSignal,
    mode: Mode,
) -> Result<PreparedPair, AudioError> {
    if reference.sample_rate_hz != degraded.sample_rate_hz {
        return Err(AudioError::SampleRateMismatch {
            reference: reference.sample_rate_hz,
            degraded: degraded.sample_rate_hz,
        });
    }
    let required = mode.sample_rate_hz();
    if reference.sample_rate_hz != required {
        return Err(AudioError::WrongModeRate {
            mode,
            required,
            actual: reference.sample_rate_hz,
        });
    }

    let layout = FrameLayout::for_rate(required);
    let min_samples = layout.samples_for_frames(DEFAULT_PATCH_FRAMES);
    let mut warnings = Vec::new();
    for (name, signal) in [("reference", &reference), ("degraded", &degraded)] {
        if signal.len() < min_samples {
            return Err(AudioError::DurationTooShort {
                signal: name,
                samples: signal.len(),
                required: min_samples,
            });
        }
        let seconds = signal.duration_s();
        let (lo, hi) = RECOMMENDED_DURATION_S;
        if !(lo..=hi).contains(&seconds) {
            let w = Warning::DurationOutsideRecommended {
                signal: name,
                seconds,
            };
            warn!("{w}");
            warnings.push(w);
        }
    }

    Ok(PreparedPair {
        reference,
        degraded,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw_pcm16(path: &Path, channels: u16, rate: u32, samples: &[i16]) {
        let spec = WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &s in samples {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn silence_file_decodes_to_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("silence.wav");
        write_raw_pcm16(&path, 1, 16000, &vec![0; 16000]);
        let sig = load_wav(&path).unwrap();
        assert_eq!(sig.len(), 16000);
        assert_eq!(sig.sample_rate_hz(), 16000);
        assert!(sig.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn symmetric_stereo_downmixes_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let frames: Vec<i16> = (0..1000).flat_map(|_| [16384, -16384]).collect();
        write_raw_pcm16(&path, 2, 16000, &frames);
        let sig = load_wav(&path).unwrap();
        assert_eq!(sig.len(), 1000);
        assert!(sig.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pcm16_minimum_is_minus_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("min.wav");
        write_raw_pcm16(&path, 1, 16000, &[-32768, 0, 32767]);
        let sig = load_wav(&path).unwrap();
        assert_eq!(sig.samples()[0], -1.0);
        assert_eq!(sig.samples()[2], 32767.0 / 32768.0);
    }

    #[test]
    fn pcm24_and_float_are_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let p24 = dir.path().join("p24.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 48000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p24, spec).unwrap();
        w.write_sample(-(1i32 << 23)).unwrap();
        w.write_sample(1i32 << 22).unwrap();
        w.finalize().unwrap();
        let sig = load_wav(&p24).unwrap();
        assert_eq!(sig.samples(), &[-1.0, 0.5]);

        let pf = dir.path().join("pf.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 48000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&pf, spec).unwrap();
        for s in [0.25f32, 1.5, -2.0] {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
        let sig = load_wav(&pf).unwrap();
        assert_eq!(sig.samples(), &[0.25, 1.0, -1.0]);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_wav("/nonexistent/definitely/missing.wav").unwrap_err();
        assert!(matches!(err, AudioError::Io { .. }));
    }

    #[test]
    fn garbage_and_truncated_files_are_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"this is not a riff file at all").unwrap();
        assert!(matches!(
            load_wav(&junk).unwrap_err(),
            AudioError::MalformedFile { .. }
        ));

        let good = dir.path().join("good.wav");
        write_raw_pcm16(&good, 1, 16000, &vec![100; 4000]);
        let bytes = std::fs::read(&good).unwrap();
        let cut = dir.path().join("cut.wav");
        std::fs::write(&cut, &bytes[..30]).unwrap();
        let err = load_wav(&cut).unwrap_err();
        assert!(
            matches!(err, AudioError::MalformedFile { .. }),
            "got {err:?}"
        );
    }

    #[test]
    fn compressed_wav_is_unsupported() {
        // Minimal IMA ADPCM header (format tag 0x11).
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(4u32 + 8 + 20 + 8 + 4).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&20u32.to_le_bytes());
        b.extend_from_slice(&0x11u16.to_le_bytes());
        b.extend_from_slice(&1u16.to_le_bytes());
        b.extend_from_slice(&16000u32.to_le_bytes());
        b.extend_from_slice(&8000u32.to_le_bytes());
        b.extend_from_slice(&256u16.to_le_bytes());
        b.extend_from_slice(&4u16.to_le_bytes());
        b.extend_from_slice(&2u16.to_le_bytes());
        b.extend_from_slice(&505u16.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&4u32.to_le_bytes());
        b.extend_from_slice(&[0, 0, 0, 0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("adpcm.wav");
        std::fs::write(&path, b).unwrap();
        let err = load_wav(&path).unwrap_err();
        assert!(
            matches!(err, AudioError::UnsupportedEncoding { .. }),
            "got {err:?}"
        );
    }

    #[test]
    fn empty_data_chunk_is_empty_audio() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.wav");
        write_raw_pcm16(&path, 1, 16000, &[]);
        assert!(matches!(
            load_wav(&path).unwrap_err(),
            AudioError::EmptyAudio(_)
        ));
    }

    fn sig(seconds: f64, rate: u32) -> AudioSignal {
        let n = (seconds * f64::from(rate)) as usize;
        AudioSignal::new(vec![0.1; n], rate).unwrap()
    }

    #[test]
    fn matching_pair_passes_without_warning() {
        let p = prepare_pair(sig(5.0, 16000), sig(5.0, 16000), Mode::Speech).unwrap();
        assert!(p.warnings.is_empty());
        assert_eq!(p.reference.len(), 80000);
    }

    #[test]
    fn rate_mismatch_is_rejected() {
        let err = prepare_pair(sig(5.0, 48000), sig(5.0, 44100), Mode::Audio).unwrap_err();
        assert!(matches!(err, AudioError::SampleRateMismatch { .. }));
    }

    #[test]
    fn wrong_mode_rate_is_rejected() {
        let err = prepare_pair(sig(5.0, 16000), sig(5.0, 16000), Mode::Audio).unwrap_err();
        assert!(matches!(
            err,
            AudioError::WrongModeRate {
                required: 48000,
                actual: 16000,
                ..
            }
        ));
    }

    #[test]
    fn short_clip_warns_but_passes() {
        let p = prepare_pair(sig(1.5, 16000), sig(1.5, 16000), Mode::Speech).unwrap();
        assert_eq!(p.warnings.len(), 2);
        assert!(matches!(
            p.warnings[0],
            Warning::DurationOutsideRecommended {
                signal: "reference",
                ..
            }
        ));
    }

    #[test]
    fn sub_patch_clip_is_too_short() {
        let err = prepare_pair(sig(0.3, 16000), sig(5.0, 16000), Mode::Speech).unwrap_err();
        assert!(matches!(
            err,
            AudioError::DurationTooShort {
                signal: "reference",
                ..
            }
        ));
    }
}
