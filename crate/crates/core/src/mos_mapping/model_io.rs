//! Plain-text model files.
//!
//! ```text
//! nsimq-svr-model 1
//! conformance_tag <free text>
//! dimension <d>
//! support_vectors <k>
//! gamma <f64>
//! bias <f64>
//! feature_means <d values>
//! feature_scales <d values>
//! sv <coef> <d values>      (k lines)
//! end
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so saving and
//! loading is lossless.

use std::fmt::Write as _;
use std::path::Path;

use super::{MappingError, SvrModel};

const MAGIC: &str = "nsimq-svr-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:?}").expect("writing to a String");
    }
    out
}

pub fn save_model(model: &SvrModel) -> Vec<u8> {
    let mut out = String::new();
    let tag = model.conformance_tag.replace(['\n', '\r'], " ");
    writeln!(out, "{MAGIC} {MODEL_FORMAT_VERSION}").unwrap();
    writeln!(out, "conformance_tag {tag}").unwrap();
    writeln!(out, "dimension {}", model.dimension()).unwrap();
    writeln!(out, "support_vectors {}", model.support_vectors.len()).unwrap();
    writeln!(out, "gamma {:?}", model.gamma).unwrap();
    writeln!(out, "bias {:?}", model.bias).unwrap();
    writeln!(out, "feature_means {}", join(&model.feature_means)).unwrap();
    writeln!(out, "feature_scales {}", join(&model.feature_scales)).unwrap();
    for (sv, coef) in model.support_vectors.iter().zip(&model.dual_coefs) {
        writeln!(out, "sv {coef:?} {}", join(sv)).unwrap();
    }
    writeln!(out, "end").unwrap();
    out.into_bytes()
}

fn corrupt(msg: impl Into<String>) -> MappingError {
    MappingError::CorruptModel(msg.into())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next line, split into its key and the rest.
    fn field(&mut self, key: &str) -> Result<&'a str, MappingError> {
        let (n, line) = self
            .inner
            .next()
            .ok_or_else(|| corrupt(format!("file ends before `{key}`")))?;
        let (k, rest) = line.split_once(' ').unwrap_or((line, ""));
        if k != key {
            return Err(corrupt(format!(
                "line {}: expected `{key}`, found `{k}`",
                n + 1
            )));
        }
        Ok(rest)
    }
}

fn parse_f64(s: &str) -> Result<f64, MappingError> {
    s.parse::<f64>()
        .map_err(|_| corrupt(format!("bad number `{s}`")))
}

fn parse_floats(s: &str, expected: usize) -> Result<Vec<f64>, MappingError> {
    let values = s
        .split_whitespace()
        .map(parse_f64)
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(corrupt(format!(
            "expected {expected} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}

fn parse_count(s: &str) -> Result<usize, MappingError> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| corrupt(format!("bad count `{s}`")))
}

pub fn load_model(bytes: &[u8]) -> Result<SvrModel, MappingError> {
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt("not UTF-8 text"))?;
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };

    let version = lines.field(MAGIC)?;
    let version: u32 = version
        .trim()
        .parse()
        .map_err(|_| corrupt(format!("bad version `{version}`")))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(MappingError::VersionMismatch {
            found: version,
            supported: MODEL_FORMAT_VERSION,
        });
    }

    let conformance_tag = lines.field("conformance_tag")?.to_string();
    let dimension = parse_count(lines.field("dimension")?)?;
    let count = parse_count(lines.field("support_vectors")?)?;
    let gamma = parse_f64(lines.field("gamma")?.trim())?;
    let bias = parse_f64(lines.field("bias")?.trim())?;
    let feature_means = parse_floats(lines.field("feature_means")?, dimension)?;
    let feature_scales = parse_floats(lines.field("feature_scales")?, dimension)?;

    let mut support_vectors = Vec::with_capacity(count);
    let mut dual_coefs = Vec::with_capacity(count);
    for _ in 0..count {
        let mut row = parse_floats(lines.field("sv")?, dimension + 1)?;
        dual_coefs.push(row.remove(0));
        support_vectors.push(row);
    }
    lines.field("end")?;

    let model = SvrModel {
        support_vectors,
        dual_coefs,
        bias,
        gamma,
        feature_means,
        feature_scales,
        conformance_tag,
    };
    model.validate()?;
    Ok(model)
}

pub fn save_model_file(path: impl AsRef<Path>, model: &SvrModel) -> Result<(), MappingError> {
    let path = path.as_ref();
    std::fs::write(path, save_model(model)).map_err(|source| MappingError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<SvrModel, MappingError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| MappingError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SvrModel {
        SvrModel {
            support_vectors: vec![vec![0.1, -2.5, 1.0 / 3.0], vec![1e-300, 7.25, -0.0]],
            dual_coefs: vec![0.75, -1.0 / 7.0],
            bias: 2.718_281_9,
            gamma: 0.0078125,
            feature_means: vec![0.9, 0.8, 0.7],
            feature_scales: vec![0.05, 0.1, 1.0],
            conformance_tag: "synthetic v1".into(),
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let m = sample();
        let bytes = save_model(&m);
        assert_eq!(load_model(&bytes).unwrap(), m);
        // And stable when re-saved.
        assert_eq!(save_model(&load_model(&bytes).unwrap()), bytes);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = save_model(&sample());
        for cut in [10, bytes.len() / 2, bytes.len() - 5] {
            assert!(
                matches!(
                    load_model(&bytes[..cut]),
                    Err(MappingError::CorruptModel(_))
                ),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn future_version_is_rejected() {
        let text = String::from_utf8(save_model(&sample())).unwrap().replacen(
            "nsimq-svr-model 1",
            "nsimq-svr-model 2",
            1,
        );
        assert!(matches!(
            load_model(text.as_bytes()),
            Err(MappingError::VersionMismatch {
                found: 2,
                supported: 1
            })
        ));
    }

    #[test]
    fn zero_scale_is_corrupt() {
        let mut m = sample();
        m.feature_scales[1] = 0.0;
        assert!(matches!(
            load_model(&save_model(&m)),
            Err(MappingError::CorruptModel(_))
        ));
    }

    #[test]
    fn garbage_is_corrupt() {
        assert!(matches!(
            load_model(b"hello world"),
            Err(MappingError::CorruptModel(_))
        ));
        assert!(matches!(
            load_model(&[0xff, 0xfe]),
            Err(MappingError::CorruptModel(_))
        ));
    }
}
