//! Command-line front end for `nsimq`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or usage,
//! 3 internal error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use nsimq::alignment::AlignmentError;
use nsimq::audio_io::AudioError;
use nsimq::fixtures::{self, FixtureError};
use nsimq::mos_mapping::{
    load_model_file, save_model_file, train_svr, MappingError, TrainingConfig, TrainingDataset,
};
use nsimq::pipeline::{compare_files, extract_features, Config, MappingChoice};
use nsimq::{Mode, QualityResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "nsimq",
    version,
    about = "Full-reference audio and speech quality (MOS-LQO) estimation",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Clean reference WAV file.
    #[arg(
        long = "reference_file",
        value_name = "WAV",
        requires = "degraded_file"
    )]
    reference_file: Option<PathBuf>,

    /// Degraded WAV file to score against the reference.
    #[arg(
        long = "degraded_file",
        value_name = "WAV",
        requires = "reference_file"
    )]
    degraded_file: Option<PathBuf>,

    /// CSV with header `reference,degraded`, one pair per row.
    #[arg(
        long = "batch_input_csv",
        value_name = "CSV",
        conflicts_with_all = ["reference_file", "degraded_file"]
    )]
    batch_input_csv: Option<PathBuf>,

    /// Where to write batch results (stdout if omitted).
    #[arg(long = "results_csv", value_name = "CSV", requires = "batch_input_csv")]
    results_csv: Option<PathBuf>,

    /// Score 16 kHz speech instead of 48 kHz audio.
    #[arg(long = "use_speech_mode")]
    use_speech_mode: bool,

    /// SVR model file replacing the mode's default mapping.
    #[arg(long = "similarity_to_quality_model", value_name = "MODEL")]
    similarity_to_quality_model: Option<PathBuf>,

    /// Print per-band and per-frame similarity after the MOS line.
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an SVR model from a `reference,degraded,mos` CSV.
    Train {
        #[arg(long = "training_csv", value_name = "CSV")]
        training_csv: PathBuf,
        #[arg(long = "output_model", value_name = "MODEL")]
        output_model: PathBuf,
        /// Extract 21-band speech-mode features instead of 32-band audio ones.
        #[arg(long = "use_speech_mode")]
        use_speech_mode: bool,
    },
    /// Write the deterministic fixture WAVs to a directory.
    Fixtures {
        #[arg(long = "output_dir", value_name = "DIR")]
        output_dir: PathBuf,
    },
    /// Retrain the shipped audio-mode model from synthetic degradations.
    DefaultModel {
        #[arg(long = "output_model", value_name = "MODEL")]
        output_model: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nsimq::Error),
    #[error("cannot read batch file {path}: {source}")]
    BatchIo {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("malformed batch file {path}: {reason}")]
    BatchFormat { path: PathBuf, reason: String },
    #[error("cannot write {target}: {source}")]
    Output {
        target: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl From<MappingError> for CliError {
    fn from(e: MappingError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => core_exit_code(e),
            CliError::BatchIo { .. } | CliError::BatchFormat { .. } | CliError::Output { .. } => {
                EXIT_IO
            }
            CliError::Usage(_) => EXIT_INVALID,
        }
    }
}

fn core_exit_code(e: &nsimq::Error) -> i32 {
    use nsimq::Error as E;
    if e.is_io() {
        return EXIT_IO;
    }
    match e {
        E::Audio(AudioError::Write { .. }) => EXIT_IO,
        E::Audio(_) => EXIT_INVALID,
        E::Alignment(AlignmentError::TooFewFrames { .. } | AlignmentError::NoPatches { .. }) => {
            EXIT_INVALID
        }
        E::Mapping(_) | E::Fixture(FixtureError::InvalidSpec(_)) => EXIT_INVALID,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Some(Command::Train {
            training_csv,
            output_model,
            use_speech_mode,
        }) => {
            return run_train(
                training_csv,
                output_model,
                mode_for(*use_speech_mode),
                out,
                err,
            )
        }
        Some(Command::Fixtures { output_dir }) => {
            let written = fixtures::write_test_data(output_dir)?;
            writeln!(
                out,
                "wrote {} fixture files to {}",
                written.len(),
                output_dir.display()
            )
            .map_err(stdout_err)?;
            return Ok(());
        }
        Some(Command::DefaultModel { output_model }) => {
            let trained = fixtures::train_default_audio_model()?;
            report_training(&trained, out, err)?;
            save_model_file(output_model, &trained.model)?;
            return Ok(());
        }
        None => {}
    }

    let cfg = config_from(cli)?;
    if let Some(batch) = &cli.batch_input_csv {
        return run_batch(batch, cli.results_csv.as_deref(), &cfg, out, err);
    }
    match (&cli.reference_file, &cli.degraded_file) {
        (Some(r), Some(d)) => run_single(r, d, &cfg, out, err),
        _ => Err(CliError::Usage(
            "give --reference_file and --degraded_file, or --batch_input_csv (see --help)".into(),
        )),
    }
}

fn mode_for(speech: bool) -> Mode {
    if speech {
        Mode::Speech
    } else {
        Mode::Audio
    }
}

fn config_from(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = Config::for_mode(mode_for(cli.use_speech_mode));
    cfg.verbose = cli.verbose;
    if let Some(path) = &cli.similarity_to_quality_model {
        let model = load_model_file(path)?;
        if model.dimension() != cfg.mode.n_bands() {
            return Err(MappingError::DimensionMismatch {
                expected: cfg.mode.n_bands(),
                actual: model.dimension(),
            }
            .into());
        }
        cfg.mapping = MappingChoice::Svr(model);
    }
    Ok(cfg)
}

fn stdout_err(source: std::io::Error) -> CliError {
    CliError::Output {
        target: "stdout".into(),
        source,
    }
}

fn run_single(
    reference: &Path,
    degraded: &Path,
    cfg: &Config,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let result = compare_files(reference, degraded, cfg)?;
    for w in &result.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    write_report(&result, cfg.verbose, out).map_err(stdout_err)
}

/// The single-pair report. The first line is always `MOS-LQO: <value>`.
pub fn write_report(
    result: &QualityResult,
    verbose: bool,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(out, "MOS-LQO: {:.5}", result.mos)?;
    if !verbose {
        return Ok(());
    }
    writeln!(out, "conformance_version: {}", result.conformance_version)?;
    writeln!(out, "mode: {}", result.mode)?;
    writeln!(out, "global_lag_samples: {}", result.global_lag_samples)?;
    writeln!(out, "overall_nsim: {:.6}", result.overall_nsim)?;
    for (f, v) in result.center_freqs_hz.iter().zip(&result.fvnsim) {
        writeln!(out, "fvnsim {f:.1} Hz: {v:.6}")?;
    }
    for (i, p) in result.patches.iter().enumerate() {
        writeln!(
            out,
            "patch {i}: ref_frame {} deg_frame {} frame_offset {} sample_lag {} nsim {:.6}",
            p.ref_start_frame, p.deg_start_frame, p.frame_offset, p.sample_lag, p.mean_nsim
        )?;
    }
    for (i, v) in result.per_frame_nsim.iter().enumerate() {
        writeln!(out, "frame {i}: {v:.6}")?;
    }
    Ok(())
}

/// One input row of a batch file.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub reference: PathBuf,
    pub degraded: PathBuf,
}

/// Reads a `reference,degraded` CSV. Relative paths are kept as written,
/// i.e. resolved against the working directory.
pub fn read_batch(path: &Path) -> Result<Vec<BatchRow>, CliError> {
    let io = |source| CliError::BatchIo {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(io)?;
    let headers = reader.headers().map_err(io)?.clone();
    if headers.len() != 2 || &headers[0] != "reference" || &headers[1] != "degraded" {
        return Err(CliError::BatchFormat {
            path: path.to_path_buf(),
            reason: format!(
                "header must be `reference,degraded`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(io)?;
            Ok(BatchRow {
                reference: PathBuf::from(&rec[0]),
                degraded: PathBuf::from(&rec[1]),
            })
        })
        .collect()
}

/// Outcome of one batch row: a MOS or an error message.
pub type RowOutcome = Result<f64, String>;

/// Scores every row concurrently. Outcomes are in input order.
pub fn score_batch(rows: &[BatchRow], cfg: &Config) -> Vec<RowOutcome> {
    rows.par_iter()
        .map(|row| {
            if row.reference.as_os_str().is_empty() || row.degraded.as_os_str().is_empty() {
                return Err("empty file path".to_string());
            }
            compare_files(&row.reference, &row.degraded, cfg)
                .map(|r| r.mos)
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn run_batch(
    input: &Path,
    results: Option<&Path>,
    cfg: &Config,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let rows = read_batch(input)?;
    let outcomes = score_batch(&rows, cfg);

    let target = results.map_or("stdout".to_string(), |p| p.display().to_string());
    let output_err = |source: std::io::Error| CliError::Output {
        target: target.clone(),
        source,
    };
    let mut buffer = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buffer);
        let mut put = |fields: [&str; 4]| w.write_record(fields).map_err(|e| e.into());
        put(["reference", "degraded", "moslqo", "error"]).map_err(output_err)?;
        for (row, outcome) in rows.iter().zip(&outcomes) {
            let reference = row.reference.to_string_lossy();
            let degraded = row.degraded.to_string_lossy();
            let (mos, message) = match outcome {
                Ok(mos) => (format!("{mos:.5}"), String::new()),
                Err(e) => (String::new(), e.clone()),
            };
            put([&reference, &degraded, &mos, &message]).map_err(output_err)?;
        }
        w.flush().map_err(output_err)?;
    }
    match results {
        Some(path) => std::fs::write(path, &buffer).map_err(output_err)?,
        None => out.write_all(&buffer).map_err(output_err)?,
    }

    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    let _ = writeln!(
        err,
        "scored {} of {} rows ({failed} failed)",
        rows.len() - failed,
        rows.len()
    );
    Ok(())
}

fn run_train(
    csv_path: &Path,
    output: &Path,
    mode: Mode,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let dataset = TrainingDataset::from_csv_path(csv_path)?;
    let cfg = Config::for_mode(mode);
    let features = extract_features(&dataset, &cfg)?;
    let labels: Vec<f64> = dataset.rows.iter().map(|r| r.mos).collect();
    let tag = csv_path.file_name().map_or("user".to_string(), |n| {
        format!("trained on {}", n.to_string_lossy())
    });
    let trained = train_svr(
        &features,
        &labels,
        &TrainingConfig {
            conformance_tag: tag,
            ..TrainingConfig::default()
        },
    )?;
    report_training(&trained, out, err)?;
    save_model_file(output, &trained.model)?;
    Ok(())
}

fn report_training(
    trained: &nsimq::mos_mapping::TrainedModel,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    for w in &trained.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if let Some(report) = &trained.report {
        write!(out, "{}", report.table()).map_err(stdout_err)?;
    }
    Ok(())
}
