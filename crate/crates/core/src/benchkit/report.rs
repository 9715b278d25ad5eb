//! Benchmark report rows and their renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    #[default]
    Table,
    Csv,
    JsonLines,
}

/// One (model, dataset, holdout) outcome. Failed rows keep their identity
/// and carry the error message with every score left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub dataset: String,
    pub holdout: usize,
    pub rt_s: Option<f64>,
    pub r2: Option<f64>,
    pub lr2: Option<f64>,
    pub params: Option<String>,
    #[serde(default)]
    pub val_r2: Option<f64>,
    #[serde(default)]
    pub val_lr2: Option<f64>,
    #[serde(default)]
    pub val_params: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
}

impl ReportRow {
    pub fn empty(model: &str, dataset: &str, holdout: usize) -> Self {
        Self {
            model: model.to_string(),
            dataset: dataset.to_string(),
            holdout,
            rt_s: None,
            r2: None,
            lr2: None,
            params: None,
            val_r2: None,
            val_lr2: None,
            val_params: None,
            error: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
}

impl BenchmarkReport {
    pub fn row(&self, model: &str, dataset: &str, holdout: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.dataset == dataset && r.holdout == holdout)
    }

    /// Dataset names in first-appearance order.
    pub fn datasets(&self) -> Vec<&str> {
        unique(self.rows.iter().map(|r| r.dataset.as_str()))
    }
}

fn unique<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

pub fn render_report(report: &BenchmarkReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Table => Ok(render_table(report)),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::JsonLines => render_json_lines(report),
    }
}

pub fn parse_json_lines(text: &str) -> Result<BenchmarkReport> {
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BenchmarkReport { rows })
}

fn render_json_lines(report: &BenchmarkReport) -> Result<String> {
    let mut out = String::new();
    for row in &report.rows {
        out.push_str(&serde_json::to_string(row).map_err(|e| Error::Io(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

fn render_csv(report: &BenchmarkReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "model",
            "dataset",
            "holdout",
            "rt_s",
            "r2",
            "lr2",
            "params",
            "val_r2",
            "val_lr2",
            "val_params",
            "error",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.rows {
        writer
            .write_record([
                r.model.clone(),
                r.dataset.clone(),
                r.holdout.to_string(),
                num(r.rt_s),
                num(r.r2),
                num(r.lr2),
                r.params.clone().unwrap_or_default(),
                num(r.val_r2),
                num(r.val_lr2),
                r.val_params.clone().unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

const CELL: usize = 8;

fn cell(v: Option<f64>, best: bool) -> String {
    match v {
        Some(x) => format!("{:>w$}", format!("{x:.2}{}", if best { "*" } else { " " }), w = CELL),
        None => format!("{:>w$}", "- ", w = CELL),
    }
}

/// Highest value per column, or lowest for runtimes.
fn best_of(values: impl Iterator<Item = Option<f64>>, lower_is_better: bool) -> Option<f64> {
    values
        .flatten()
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            Some(a) if (lower_is_better && a <= v) || (!lower_is_better && a >= v) => Some(a),
            _ => Some(v),
        })
}

fn is_best(v: Option<f64>, best: Option<f64>) -> bool {
    matches!((v, best), (Some(a), Some(b)) if format!("{a:.2}") == format!("{b:.2}"))
}

/// Per-dataset tables: one row per model, one column group per holdout.
/// The best value of each column is marked with `*`.
fn render_table(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let model_width = report.rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    if report.rows.is_empty() {
        let _ = writeln!(
            out,
            "{:<model_width$} | {:>CELL$}{:>CELL$}{:>CELL$}",
            "Model", "RT(s)", "R²", "lR²"
        );
        return out;
    }
    for dataset in report.datasets() {
        let rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.dataset == dataset).collect();
        let holdouts = unique(rows.iter().map(|r| r.holdout));
        let models = unique(rows.iter().map(|r| r.model.as_str()));
        let group = 3 * CELL;

        let _ = writeln!(out, "== {dataset} ==");
        let mut head1 = format!("{:<model_width$}", "");
        let mut head2 = format!("{:<model_width$}", "Model");
        for h in &holdouts {
            let _ = write!(head1, " | {:^group$}", format!("{h} datapoints"));
            let _ = write!(head2, " | {:>CELL$}{:>CELL$}{:>CELL$}", "RT(s) ", "R² ", "lR² ");
        }
        let _ = writeln!(out, "{head1}");
        let _ = writeln!(out, "{head2}");
        let _ = writeln!(out, "{}", "-".repeat(model_width + holdouts.len() * (group + 3)));

        let find = |m: &str, h: usize| rows.iter().find(|r| r.model == m && r.holdout == h).copied();
        let column_best = |h: usize, pick: fn(&ReportRow) -> Option<f64>, lower: bool| {
            best_of(rows.iter().filter(|r| r.holdout == h).map(|r| pick(r)), lower)
        };
        for m in &models {
            let mut line = format!("{m:<model_width$}");
            for &h in &holdouts {
                let row = find(m, h);
                let _ = write!(line, " | ");
                for (pick, lower) in [
                    ((|r: &ReportRow| r.rt_s) as fn(&ReportRow) -> Option<f64>, true),
                    (|r: &ReportRow| r.r2, false),
                    (|r: &ReportRow| r.lr2, false),
                ] {
                    let v = row.and_then(pick);
                    line.push_str(&cell(v, is_best(v, column_best(h, pick, lower))));
                }
            }
            let _ = writeln!(out, "{line}");
        }

        if rows.iter().any(|r| r.val_lr2.is_some()) {
            let _ = writeln!(out, "validation-selected (grid point chosen on last 10% of train)");
            for m in &models {
                let mut line = format!("{m:<model_width$}");
                for &h in &holdouts {
                    let row = find(m, h);
                    let _ = write!(line, " | {:>CELL$}", "");
                    for pick in [
                        (|r: &ReportRow| r.val_r2) as fn(&ReportRow) -> Option<f64>,
                        |r: &ReportRow| r.val_lr2,
                    ] {
                        let v = row.and_then(pick);
                        line.push_str(&cell(v, is_best(v, column_best(h, pick, false))));
                    }
                }
                let _ = writeln!(out, "{line}");
            }
        }
        for r in rows.iter().filter(|r| !r.is_ok()) {
            let _ = writeln!(
                out,
                "! {} @ {}: {}",
                r.model,
                r.holdout,
                r.error.as_deref().unwrap_or("")
            );
        }
        out.push('\n');
    }
    out
}
