//! Benchmark protocol: ingestion, holdout sweeps and report assembly.
//!
//! Every (dataset, holdout, model) triple becomes one report row. For each
//! row the model's hyperparameter grid is swept; each grid point is fit on
//! the training split, forecast over the whole holdout in one multi-step
//! forecast and scored with R² and lR² against the held-out values. The
//! reported scores belong to the grid point with the best test lR². A second
//! set of scores picks the grid point on the last 10% of the training split
//! instead, so it never looks at the test segment.

pub mod config;
pub mod ingest;
pub mod pipeline;
pub mod report;

use std::path::Path;

use rayon::prelude::*;

pub use config::{BenchmarkConfig, ModelGrid};
pub use ingest::{load_dataset, DataSource, DatasetSpec};
pub use pipeline::{forecast, Candidate, FittedModel, ForecastSettings, ModelId, Route};
pub use report::{parse_json_lines, render_report, BenchmarkReport, ReportFormat, ReportRow};

use crate::error::Result;
use crate::evalkit::{log_r_squared, r_squared, timed, LOG_EPSILON};
use crate::series::{split_holdout, TimeSeries};

/// Fraction of the training split used for validation-based selection.
pub const VALIDATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
struct Scored {
    r2: f64,
    lr2: f64,
    params: String,
    seconds: f64,
}

fn evaluate(candidate: &Candidate, train: &TimeSeries, test: &TimeSeries, config: &BenchmarkConfig) -> Result<Scored> {
    let (outcome, seconds) = timed(|| -> Result<(Vec<f64>, String)> {
        let model = candidate.fit(train)?;
        let settings = ForecastSettings {
            horizon: test.len(),
            scenarios: config.scenarios,
            seed: config.seed,
            quantiles: config.quantiles.clone(),
            route: Route::Auto,
        };
        let result = forecast(&model, train, &settings)?;
        Ok((result.point, model.describe()))
    });
    let (point, params) = outcome?;
    Ok(Scored {
        r2: r_squared(test.values(), &point)?,
        lr2: log_r_squared(test.values(), &point, LOG_EPSILON)?,
        params,
        seconds,
    })
}

/// Index of the best lR² among successful runs; ties keep the earliest.
fn best_index(scores: &[Result<Scored>]) -> Option<usize> {
    scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.as_ref().ok().map(|s| (i, s.lr2)))
        .filter(|(_, lr2)| lr2.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, lr2)| match best {
            Some((_, b)) if b >= lr2 => best,
            _ => Some((i, lr2)),
        })
        .map(|(i, _)| i)
}

struct Job<'a> {
    dataset: &'a DatasetSpec,
    loaded: &'a std::result::Result<(TimeSeries, f64), String>,
    holdout: usize,
    grid: &'a ModelGrid,
}

fn run_row(job: &Job<'_>, config: &BenchmarkConfig) -> ReportRow {
    let mut row = ReportRow::empty(job.grid.id().label(), &job.dataset.name, job.holdout);
    let (series, load_seconds) = match job.loaded {
        Ok((s, t)) => (s, *t),
        Err(e) => {
            row.error = Some(e.clone());
            return row;
        }
    };
    let split = match split_holdout(series, job.holdout) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let period = job.dataset.seasonal_period(split.train.len());
    let candidates = job.grid.candidates(period);
    let scores: Vec<Result<Scored>> = candidates
        .iter()
        .map(|c| evaluate(c, &split.train, &split.test, config))
        .collect();

    let Some(best) = best_index(&scores) else {
        let first_error = scores.iter().find_map(|s| s.as_ref().err().map(|e| e.to_string()));
        row.error = Some(first_error.unwrap_or_else(|| "no grid point produced a finite score".into()));
        return row;
    };
    let winner = scores[best].as_ref().expect("best index is Ok");
    row.rt_s = Some(load_seconds + winner.seconds);
    row.r2 = Some(winner.r2);
    row.lr2 = Some(winner.lr2);
    row.params = Some(winner.params.clone());

    if config.validation_selection {
        let n_val = ((split.train.len() as f64 * VALIDATION_FRACTION) as usize).max(1);
        if let Ok(inner) = split_holdout(&split.train, n_val) {
            let val_scores: Vec<Result<Scored>> = candidates
                .iter()
                .map(|c| evaluate(c, &inner.train, &inner.test, config))
                .collect();
            if let Some(Ok(chosen)) = best_index(&val_scores).map(|i| &scores[i]) {
                row.val_r2 = Some(chosen.r2);
                row.val_lr2 = Some(chosen.lr2);
                row.val_params = Some(chosen.params.clone());
            }
        }
    }
    row
}

/// Runs every (dataset, holdout, model) row of `config`. Row failures are
/// recorded in the row; only an invalid configuration aborts the run.
pub fn run_benchmark(config: &BenchmarkConfig, base_dir: Option<&Path>) -> Result<BenchmarkReport> {
    config.validate()?;
    let loaded: Vec<std::result::Result<(TimeSeries, f64), String>> = config
        .datasets
        .iter()
        .map(|d| {
            let (series, seconds) = timed(|| load_dataset(d, base_dir));
            series.map(|s| (s, seconds)).map_err(|e| e.to_string())
        })
        .collect();

    let mut jobs = Vec::new();
    for (dataset, loaded) in config.datasets.iter().zip(&loaded) {
        for &requested in &config.holdouts {
            let holdout = dataset.effective_holdout(requested);
            for grid in &config.models {
                jobs.push(Job {
                    dataset,
                    loaded,
                    holdout,
                    grid,
                });
            }
        }
    }

    let rows = if config.parallel_rows {
        jobs.par_iter().map(|j| run_row(j, config)).collect()
    } else {
        jobs.iter()
            .map(|j| {
                let row = run_row(j, config);
                log_row(&row);
                row
            })
            .collect()
    };
    Ok(BenchmarkReport { rows })
}

fn log_row(row: &ReportRow) {
    if std::env::var_os("TELECAST_QUIET").is_some() {
        return;
    }
    match (&row.error, row.lr2) {
        (Some(e), _) => eprintln!("[bench] {}/{}/{}: error: {e}", row.dataset, row.model, row.holdout),
        (None, Some(lr2)) => eprintln!(
            "[bench] {}/{}/{}: lR2={lr2:.3} rt={:.2}s",
            row.dataset,
            row.model,
            row.holdout,
            row.rt_s.unwrap_or(0.0)
        ),
        _ => {}
    }
}
