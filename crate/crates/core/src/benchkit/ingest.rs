//! Two-column CSV ingestion and dataset materialization.

use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{regularize, GapPolicy, TimeSeries};
use crate::synth::{synth, SynthSpec};

pub const DEFAULT_TIMESTAMP_COLUMN: &str = "timestamp";
pub const DEFAULT_VALUE_COLUMN: &str = "value";
const ISO_FORMATS: [&str; 2] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    File(PathBuf),
    Synth(SynthSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationMethod {
    Sum,
    Mean,
}

/// Bucketing of raw records into fixed windows aligned to epoch multiples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregation {
    pub method: AggregationMethod,
    /// Window length in seconds.
    pub window: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DataSource,
    #[serde(default = "default_timestamp_column")]
    pub timestamp_column: String,
    #[serde(default = "default_value_column")]
    pub value_column: String,
    /// Target sampling interval in seconds.
    pub interval: i64,
    #[serde(default)]
    pub aggregation: Option<Aggregation>,
    #[serde(default)]
    pub gap_policy: GapPolicy,
    /// Seasonal period in samples; derived from the interval when absent.
    #[serde(default)]
    pub period: Option<usize>,
    /// `(holdout, replacement)` pairs, e.g. `[5000, 4380]`.
    #[serde(default)]
    pub holdout_overrides: Vec<(usize, usize)>,
}

fn default_timestamp_column() -> String {
    DEFAULT_TIMESTAMP_COLUMN.to_string()
}

fn default_value_column() -> String {
    DEFAULT_VALUE_COLUMN.to_string()
}

impl DatasetSpec {
    pub fn synthetic(name: impl Into<String>, spec: SynthSpec) -> Self {
        Self {
            name: name.into(),
            interval: spec.interval,
            source: DataSource::Synth(spec),
            timestamp_column: default_timestamp_column(),
            value_column: default_value_column(),
            aggregation: None,
            gap_policy: GapPolicy::default(),
            period: None,
            holdout_overrides: Vec::new(),
        }
    }

    pub fn file(name: impl Into<String>, path: impl Into<PathBuf>, interval: i64) -> Self {
        Self {
            name: name.into(),
            source: DataSource::File(path.into()),
            timestamp_column: default_timestamp_column(),
            value_column: default_value_column(),
            interval,
            aggregation: None,
            gap_policy: GapPolicy::default(),
            period: None,
            holdout_overrides: Vec::new(),
        }
    }

    /// Seasonal period used by Holt-Winters: configured, else one day of
    /// samples, else one hour when a day does not fit the data.
    pub fn seasonal_period(&self, train_len: usize) -> usize {
        if let Some(p) = self.period {
            return p;
        }
        let per = |seconds: i64| (seconds / self.interval.max(1)).max(2) as usize;
        let daily = per(86_400);
        if 2 * daily <= train_len {
            daily
        } else {
            per(3_600)
        }
    }

    /// Holdout actually used in place of `holdout`.
    pub fn effective_holdout(&self, holdout: usize) -> usize {
        self.holdout_overrides
            .iter()
            .find(|(from, _)| *from == holdout)
            .map_or(holdout, |(_, to)| *to)
    }
}

/// Parses epoch seconds or `YYYY-MM-DD HH:MM:SS` (UTC).
pub fn parse_timestamp(raw: &str) -> Option<i64> {
    let s = raw.trim();
    if let Ok(epoch) = s.parse::<i64>() {
        return Some(epoch);
    }
    let s = s.strip_suffix('Z').unwrap_or(s);
    ISO_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| dt.and_utc().timestamp())
}

pub fn format_timestamp(epoch: i64) -> String {
    chrono::DateTime::from_timestamp(epoch, 0)
        .map(|dt| dt.format(ISO_FORMATS[0]).to_string())
        .unwrap_or_else(|| epoch.to_string())
}

/// Reads `(timestamp, value)` records from comma-separated text with a header row.
pub fn read_records(reader: impl Read, timestamp_column: &str, value_column: &str) -> Result<Vec<(i64, f64)>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!(
                "missing column '{name}' in header {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        })
    };
    let (ti, vi) = (column(timestamp_column)?, column(value_column)?);

    let mut records = Vec::new();
    for row in csv.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(i).unwrap_or("");
        let t = parse_timestamp(field(ti)).ok_or_else(|| Error::Parse {
            line,
            message: format!("unparseable timestamp '{}'", field(ti)),
        })?;
        let v: f64 = field(vi)
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("unparseable value '{}'", field(vi)),
            })?;
        records.push((t, v));
    }
    Ok(records)
}

/// Sums or averages records into epoch-aligned windows.
pub fn aggregate(records: &[(i64, f64)], aggregation: Aggregation) -> Result<Vec<(i64, f64)>> {
    if aggregation.window <= 0 {
        return Err(Error::InvalidParameter(format!(
            "aggregation window must be positive, got {}",
            aggregation.window
        )));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.0);
    let mut out: Vec<(i64, f64, usize)> = Vec::new();
    for (t, v) in sorted {
        let bucket = t.div_euclid(aggregation.window) * aggregation.window;
        match out.last_mut() {
            Some(last) if last.0 == bucket => {
                last.1 += v;
                last.2 += 1;
            }
            _ => out.push((bucket, v, 1)),
        }
    }
    Ok(out
        .into_iter()
        .map(|(t, sum, count)| match aggregation.method {
            AggregationMethod::Sum => (t, sum),
            AggregationMethod::Mean => (t, sum / count as f64),
        })
        .collect())
}

/// Turns raw records into a regular series at `spec.interval`.
pub fn series_from_records(records: Vec<(i64, f64)>, spec: &DatasetSpec) -> Result<TimeSeries> {
    if records.is_empty() {
        return Err(Error::EmptyDataset(spec.name.clone()));
    }
    let mut records = match spec.aggregation {
        Some(agg) => aggregate(&records, agg)?,
        None => records,
    };
    records.sort_by_key(|r| r.0);
    if let Some(w) = records.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidSeries(format!("duplicate timestamp {}", w[0].0)));
    }
    let (timestamps, values) = records.into_iter().unzip();
    let raw = TimeSeries::new(timestamps, values, spec.interval)?;
    regularize(&raw, spec.interval, spec.gap_policy)
}

/// Loads the dataset; relative file paths resolve against `base_dir`.
pub fn load_dataset(spec: &DatasetSpec, base_dir: Option<&Path>) -> Result<TimeSeries> {
    let records = match &spec.source {
        DataSource::Synth(s) => {
            let series = synth(s)?;
            series
                .timestamps()
                .iter()
                .copied()
                .zip(series.values().iter().copied())
                .collect()
        }
        DataSource::File(path) => {
            let path = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let file = std::fs::File::open(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            read_records(file, &spec.timestamp_column, &spec.value_column)?
        }
    };
    series_from_records(records, spec)
}

/// Writes a series in the ingestion format.
pub fn write_series(series: &TimeSeries, mut out: impl std::io::Write) -> Result<()> {
    writeln!(out, "{DEFAULT_TIMESTAMP_COLUMN},{DEFAULT_VALUE_COLUMN}")?;
    for (t, v) in series.timestamps().iter().zip(series.values()) {
        writeln!(out, "{},{}", format_timestamp(*t), v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(interval: i64) -> DatasetSpec {
        DatasetSpec::file("t", "unused.csv", interval)
    }

    #[test]
    fn iso_and_epoch_agree() {
        let iso = "timestamp,value\n2015-02-26 21:42:53,182\n2015-02-26 21:47:53,160\n2015-02-26 21:52:53,177\n";
        let epoch = "timestamp,value\n1424986973,182\n1424987273,160\n1424987573,177\n";
        let a = series_from_records(read_records(iso.as_bytes(), "timestamp", "value").unwrap(), &spec(300)).unwrap();
        let b = series_from_records(
            read_records(epoch.as_bytes(), "timestamp", "value").unwrap(),
            &spec(300),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.interval(), 300);
        assert_eq!(a.first_timestamp(), 1_424_986_973);
        assert_eq!(a.values(), &[182.0, 160.0, 177.0]);
    }

    #[test]
    fn hourly_sum_of_minutes() {
        let start = 1_420_416_000;
        let records: Vec<(i64, f64)> = (0..180).map(|m| (start + 60 * m, 1.0)).collect();
        let mut s = spec(3_600);
        s.aggregation = Some(Aggregation {
            method: AggregationMethod::Sum,
            window: 3_600,
        });
        let series = series_from_records(records.clone(), &s).unwrap();
        assert_eq!(series.values(), &[60.0, 60.0, 60.0]);
        s.aggregation = Some(Aggregation {
            method: AggregationMethod::Mean,
            window: 3_600,
        });
        assert_eq!(series_from_records(records, &s).unwrap().values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "timestamp,value\n2015-02-26 21:42:53,1\n2015-02-26 21:47:53,abc\n";
        assert!(matches!(
            read_records(bad.as_bytes(), "timestamp", "value"),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad_ts = "timestamp,value\nyesterday,1\n";
        assert!(matches!(
            read_records(bad_ts.as_bytes(), "timestamp", "value"),
            Err(Error::Parse { line: 2, .. })
        ));
        let missing = "time,value\n1,2\n";
        assert!(matches!(
            read_records(missing.as_bytes(), "timestamp", "value"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let records = read_records("timestamp,value\n".as_bytes(), "timestamp", "value").unwrap();
        assert_eq!(
            series_from_records(records, &spec(60)),
            Err(Error::EmptyDataset("t".into()))
        );
    }

    #[test]
    fn custom_columns_and_gaps() {
        let text = "ts,flow_size,count\n0,1.5,3\n120,2.5,4\n";
        let records = read_records(text.as_bytes(), "ts", "flow_size").unwrap();
        let s = series_from_records(records, &spec(60)).unwrap();
        assert_eq!(s.values(), &[1.5, 2.0, 2.5]);
    }

    #[test]
    fn overrides_and_periods() {
        let mut s = spec(3_600);
        s.holdout_overrides = vec![(5_000, 4_380)];
        assert_eq!(s.effective_holdout(5_000), 4_380);
        assert_eq!(s.effective_holdout(1_000), 1_000);
        assert_eq!(s.seasonal_period(1_000), 24);
        assert_eq!(spec(300).seasonal_period(10_000), 288);
        assert_eq!(spec(60).seasonal_period(2_000), 60);
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("1970-01-01 00:01:00"), Some(60));
        assert_eq!(parse_timestamp("1970-01-01T00:01:00Z"), Some(60));
        assert_eq!(parse_timestamp(" 60 "), Some(60));
        assert_eq!(parse_timestamp("01/01/1970"), None);
        assert_eq!(format_timestamp(60), "1970-01-01 00:01:00");
    }
}
