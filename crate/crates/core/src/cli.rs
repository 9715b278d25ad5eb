//! Batch command-line interface.
//!
//! Exit codes: 0 on success, 1 on runtime or IO failure, 2 on usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::benchkit::ingest::{format_timestamp, read_records, series_from_records, write_series};
use crate::benchkit::{
    forecast, parse_json_lines, render_report, run_benchmark, BenchmarkConfig, Candidate, DatasetSpec,
    ForecastSettings, ModelId, ReportFormat, Route,
};
use crate::error::{Error, Result};
use crate::generator::{DEFAULT_QUANTILES, DEFAULT_SCENARIOS};
use crate::regfit::{ValueTransform, DEFAULT_LAMBDA};
use crate::series::GapPolicy;
use crate::smoothing::{SmoothingKind, SmoothingParams};
use crate::synth::{synth, Archetype, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "telecast", version, about = "Telemetry forecasting and benchmarking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a series and write a banded forecast.
    Forecast(ForecastArgs),
    /// Run a benchmark configuration and render the report.
    Bench(BenchArgs),
    /// Generate a synthetic telemetry series.
    Synth(SynthArgs),
    /// Re-render a json-lines benchmark report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelId,
    #[arg(long, default_value_t = 24)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_SCENARIOS)]
    pub scenarios: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated band levels.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QUANTILES)]
    pub quantiles: Vec<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Sampling interval in seconds; inferred from the data when absent.
    #[arg(long)]
    pub interval: Option<i64>,
    #[arg(long, default_value = "timestamp")]
    pub timestamp_column: String,
    #[arg(long, default_value = "value")]
    pub value_column: String,
    #[arg(long, value_enum, default_value_t = GapPolicy::default())]
    pub gap_policy: GapPolicy,
    /// Holt-Winters period in samples.
    #[arg(long)]
    pub period: Option<usize>,
    /// Fixed smoothing weights; the lattice search is used when absent.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// STAR autoregression window.
    #[arg(long, default_value_t = 24)]
    pub aw: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = ValueTransform::Identity)]
    pub transform: ValueTransform,
    #[arg(long, value_enum, default_value_t = Route::Auto)]
    pub route: Route,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// TOML configuration; the built-in synthetic benchmark when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print the built-in configuration as TOML and exit.
    #[arg(long)]
    pub print_default_config: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub archetype: Archetype,
    #[arg(long)]
    pub length: usize,
    #[arg(long, default_value_t = 3_600)]
    pub interval: i64,
    #[arg(long, default_value_t = 0.1)]
    pub noise_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// json-lines report produced by `bench --format json-lines`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Forecast(a) => cmd_forecast(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
    }
}

/// Median spacing between consecutive distinct timestamps.
fn infer_interval(records: &[(i64, f64)]) -> Result<i64> {
    let mut ts: Vec<i64> = records.iter().map(|r| r.0).collect();
    ts.sort_unstable();
    let mut gaps: Vec<i64> = ts.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0).collect();
    if gaps.is_empty() {
        return Err(Error::InsufficientData {
            needed: 2,
            got: ts.len(),
        });
    }
    gaps.sort_unstable();
    Ok(gaps[gaps.len() / 2])
}

fn smoothing_params(a: &ForecastArgs, kind: SmoothingKind) -> std::result::Result<Option<SmoothingParams>, Failure> {
    let given = [a.alpha, a.beta, a.gamma];
    if given.iter().all(Option::is_none) {
        return Ok(None);
    }
    let needed = match kind {
        SmoothingKind::Ses => 1,
        SmoothingKind::Holt => 2,
        SmoothingKind::HoltWinters { .. } => 3,
    };
    if given[..needed].iter().any(Option::is_none) {
        return Err(Failure::Usage(format!(
            "model {} needs all of --alpha --beta --gamma up to its order",
            a.model
        )));
    }
    let params = SmoothingParams {
        alpha: given[0].unwrap_or(0.0),
        beta: given[1].unwrap_or(0.0),
        gamma: given[2].unwrap_or(0.0),
    };
    params.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(Some(params))
}

fn cmd_forecast(a: &ForecastArgs) -> std::result::Result<(), Failure> {
    if a.horizon == 0 || a.scenarios == 0 {
        return Err(Failure::Usage("--horizon and --scenarios must be positive".into()));
    }
    if a.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Failure::Usage("--quantiles must lie inside (0, 1)".into()));
    }
    let file = std::fs::File::open(&a.input).map_err(|e| Error::Io(format!("{}: {e}", a.input.display())))?;
    let records = read_records(file, &a.timestamp_column, &a.value_column)?;
    let interval = match a.interval {
        Some(i) if i > 0 => i,
        Some(_) => return Err(Failure::Usage("--interval must be positive".into())),
        None => infer_interval(&records)?,
    };
    let mut spec = DatasetSpec::file("input", &a.input, interval);
    spec.gap_policy = a.gap_policy;
    spec.period = a.period;
    let train = series_from_records(records, &spec)?;

    let candidate = match a.model {
        ModelId::Ses => Candidate::Smoothing {
            kind: SmoothingKind::Ses,
            params: None,
        },
        ModelId::Holt => Candidate::Smoothing {
            kind: SmoothingKind::Holt,
            params: None,
        },
        ModelId::Hwes => Candidate::Smoothing {
            kind: SmoothingKind::HoltWinters {
                period: spec.seasonal_period(train.len()),
            },
            params: None,
        },
        ModelId::Std => Candidate::Std {
            lambda: a.lambda,
            transform: a.transform,
        },
        ModelId::Star => Candidate::Star {
            aw: a.aw,
            lambda: a.lambda,
            transform: a.transform,
        },
    };
    let candidate = match candidate {
        Candidate::Smoothing { kind, .. } => Candidate::Smoothing {
            kind,
            params: smoothing_params(a, kind)?,
        },
        other => other,
    };
    let model = candidate.fit(&train)?;
    let settings = ForecastSettings {
        horizon: a.horizon,
        scenarios: a.scenarios,
        seed: a.seed,
        quantiles: a.quantiles.clone(),
        route: a.route,
    };
    let result = forecast(&model, &train, &settings)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["timestamp".to_string(), "point".to_string()];
    header.extend(result.bands.iter().map(|b| format!("q{}", b.level)));
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(&header).map_err(csv_err)?;
    for (step, t) in train.future_timestamps(a.horizon).into_iter().enumerate() {
        let mut record = vec![format_timestamp(t), result.point[step].to_string()];
        record.extend(result.bands.iter().map(|b| b.values[step].to_string()));
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    emit(a.output.as_deref(), &String::from_utf8_lossy(&bytes))?;
    eprintln!("{} {}", a.model, model.describe());
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> std::result::Result<(), Failure> {
    let (config, base_dir) = match &a.config {
        Some(path) => (BenchmarkConfig::from_path(path)?, path.parent().map(Path::to_path_buf)),
        None => (BenchmarkConfig::default_synthetic(), None),
    };
    if a.print_default_config {
        emit(a.output.as_deref(), &config.to_toml_string()?)?;
        return Ok(());
    }
    let report = run_benchmark(&config, base_dir.as_deref())?;
    emit(a.output.as_deref(), &render_report(&report, a.format)?)?;
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> std::result::Result<(), Failure> {
    let spec = SynthSpec {
        archetype: a.archetype,
        length: a.length,
        interval: a.interval,
        noise_scale: a.noise_scale,
        seed: a.seed,
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let series = synth(&spec)?;
    let mut buf = Vec::new();
    write_series(&series, &mut buf)?;
    emit(a.output.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> std::result::Result<(), Failure> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| Error::Io(format!("{}: {e}", a.input.display())))?;
    let report = parse_json_lines(&text)?;
    emit(a.output.as_deref(), &render_report(&report, a.format)?)?;
    Ok(())
}
