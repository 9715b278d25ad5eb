//! Calendar regression forecasters.
//!
//! STD regresses the (optionally log1p-transformed) series on a scaled time
//! index plus one-hot calendar features. STAR adds the last `aw` observed
//! values as lag features. Both are one joint ridge regression over the
//! concatenated feature blocks, with an unpenalized intercept.

use std::collections::BTreeSet;

use chrono::{DateTime, Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::SteppableForecaster;
use crate::series::TimeSeries;

pub const DEFAULT_LAMBDA: f64 = 1e-6;

const DAY: i64 = 86_400;
/// Training span from which month-of-year is enabled by default.
const MONTH_FEATURE_MIN_SPAN: i64 = 60 * DAY;
/// Relative pivot size below which the normal equations count as singular.
const PIVOT_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureGroup {
    HourOfDay,
    DayOfWeek,
    MonthOfYear,
    Holiday,
}

impl FeatureGroup {
    pub fn levels(self) -> usize {
        match self {
            FeatureGroup::HourOfDay => 24,
            FeatureGroup::DayOfWeek => 7,
            FeatureGroup::MonthOfYear => 12,
            FeatureGroup::Holiday => 2,
        }
    }
}

/// Which features describe a timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeFeatureConfig {
    /// Include the scaled time index.
    pub trend: bool,
    pub groups: BTreeSet<FeatureGroup>,
    pub holidays: BTreeSet<NaiveDate>,
    /// Added to UTC timestamps before calendar decomposition.
    pub utc_offset: i64,
}

impl TimeFeatureConfig {
    pub fn new(trend: bool, groups: impl IntoIterator<Item = FeatureGroup>) -> Self {
        Self {
            trend,
            groups: groups.into_iter().collect(),
            holidays: BTreeSet::new(),
            utc_offset: 0,
        }
    }

    /// Trend plus hour-of-day and day-of-week, with month-of-year once the
    /// training data spans at least 60 days.
    pub fn default_for(train: &TimeSeries) -> Self {
        let mut config = Self::new(true, [FeatureGroup::HourOfDay, FeatureGroup::DayOfWeek]);
        if train.last_timestamp() - train.first_timestamp() >= MONTH_FEATURE_MIN_SPAN {
            config.groups.insert(FeatureGroup::MonthOfYear);
        }
        config
    }

    pub fn with_holidays(mut self, holidays: impl IntoIterator<Item = NaiveDate>) -> Self {
        self.holidays = holidays.into_iter().collect();
        self.groups.insert(FeatureGroup::Holiday);
        self
    }

    pub fn one_hot_width(&self) -> usize {
        self.groups.iter().map(|g| g.levels()).sum()
    }

    /// Width of the trend and calendar blocks.
    pub fn calendar_width(&self) -> usize {
        usize::from(self.trend) + self.one_hot_width()
    }

    fn level_of(&self, group: FeatureGroup, timestamp: i64) -> usize {
        let local = timestamp + self.utc_offset;
        let days = local.div_euclid(DAY);
        match group {
            FeatureGroup::HourOfDay => (local.rem_euclid(DAY) / 3_600) as usize,
            // 1970-01-01 was a Thursday; Monday is level 0
            FeatureGroup::DayOfWeek => (days + 3).rem_euclid(7) as usize,
            FeatureGroup::MonthOfYear => calendar_date(local).month0() as usize,
            FeatureGroup::Holiday => usize::from(self.holidays.contains(&calendar_date(local))),
        }
    }
}

fn calendar_date(local: i64) -> NaiveDate {
    DateTime::from_timestamp(local.div_euclid(DAY) * DAY, 0)
        .map(|dt| dt.date_naive())
        .unwrap_or(NaiveDate::MIN)
}

/// Features of a single timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub trend: Option<f64>,
    pub one_hot: Vec<f64>,
    /// Lagged values, oldest first.
    pub ar: Vec<f64>,
}

impl FeatureVector {
    pub fn width(&self) -> usize {
        usize::from(self.trend.is_some()) + self.one_hot.len() + self.ar.len()
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.width());
        self.write_row(&mut row);
        row
    }

    fn write_row(&self, out: &mut Vec<f64>) {
        out.extend(self.trend);
        out.extend_from_slice(&self.one_hot);
        out.extend_from_slice(&self.ar);
    }
}

/// Maps timestamps (and lag windows) to feature vectors for one training span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBuilder {
    pub config: TimeFeatureConfig,
    /// Timestamp mapped to trend 0.
    pub origin: i64,
    /// Seconds mapped to one unit of trend.
    pub span: i64,
    pub aw: usize,
}

impl FeatureBuilder {
    pub fn for_training(config: TimeFeatureConfig, train: &TimeSeries, aw: usize) -> Self {
        let span = (train.last_timestamp() - train.first_timestamp()).max(1);
        Self {
            config,
            origin: train.first_timestamp(),
            span,
            aw,
        }
    }

    pub fn width(&self) -> usize {
        self.config.calendar_width() + self.aw
    }

    pub fn build(&self, timestamp: i64, recent_window: Option<&[f64]>) -> Result<FeatureVector> {
        let ar = match (self.aw, recent_window) {
            (0, None) => Vec::new(),
            (0, Some(w)) => {
                return Err(Error::Arity {
                    expected: 0,
                    got: w.len(),
                })
            }
            (aw, None) => return Err(Error::Arity { expected: aw, got: 0 }),
            (aw, Some(w)) if w.len() != aw => {
                return Err(Error::Arity {
                    expected: aw,
                    got: w.len(),
                })
            }
            (_, Some(w)) => w.to_vec(),
        };
        let trend = self
            .config
            .trend
            .then(|| (timestamp - self.origin) as f64 / self.span as f64);
        let mut one_hot = vec![0.0; self.config.one_hot_width()];
        let mut offset = 0;
        for &group in &self.config.groups {
            one_hot[offset + self.config.level_of(group, timestamp)] = 1.0;
            offset += group.levels();
        }
        Ok(FeatureVector { trend, one_hot, ar })
    }
}

/// Ridge regression with an unpenalized intercept.
///
/// Minimizes `‖Xw + c − y‖² + λ‖w‖²` by centering the columns of `X` and
/// solving the normal equations with a Cholesky factorization.
pub fn ridge_solve(rows: &[Vec<f64>], targets: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    let width = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(Error::LengthMismatch(width, bad.len()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    ridge_solve_flat(&flat, width, targets, lambda)
}

fn ridge_solve_flat(design: &[f64], width: usize, targets: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    let n = targets.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if design.len() != n * width {
        return Err(Error::LengthMismatch(design.len(), n * width));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    let y_mean = targets.iter().sum::<f64>() / n as f64;
    if width == 0 {
        return Ok((Vec::new(), y_mean));
    }

    let mut x_mean = vec![0.0; width];
    for row in design.chunks_exact(width) {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= n as f64);

    // upper triangle of Xc'Xc and Xc'yc
    let mut gram = vec![0.0; width * width];
    let mut rhs = vec![0.0; width];
    let mut centered = vec![0.0; width];
    for (row, &y) in design.chunks_exact(width).zip(targets) {
        for j in 0..width {
            centered[j] = row[j] - x_mean[j];
        }
        let yc = y - y_mean;
        for i in 0..width {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            rhs[i] += ci * yc;
            let g = &mut gram[i * width..(i + 1) * width];
            for j in i..width {
                g[j] += ci * centered[j];
            }
        }
    }
    for i in 0..width {
        gram[i * width + i] += lambda;
        for j in 0..i {
            gram[i * width + j] = gram[j * width + i];
        }
    }

    let weights = cholesky_solve(&mut gram, width, &rhs)?;
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok((weights, intercept))
}

/// Solves `A x = b` for symmetric positive definite `A` (overwritten).
fn cholesky_solve(a: &mut [f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let scale = (0..n)
        .map(|i| a[i * n + i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d.is_nan() || d <= PIVOT_TOLERANCE * scale {
            return Err(Error::Singular);
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= a[i * n + k] * z[k];
        }
        z[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= a[k * n + i] * z[k];
        }
        z[i] /= a[i * n + i];
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ValueTransform {
    #[default]
    Identity,
    /// `ln(1 + max(y, 0))`, inverted with `exp(z) − 1`.
    Log1p,
}

impl ValueTransform {
    pub fn forward(self, y: f64) -> f64 {
        match self {
            ValueTransform::Identity => y,
            ValueTransform::Log1p => y.max(0.0).ln_1p(),
        }
    }

    pub fn inverse(self, z: f64) -> f64 {
        match self {
            ValueTransform::Identity => z,
            ValueTransform::Log1p => z.exp_m1(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionKind {
    Std,
    Star,
}

/// A fitted STD or STAR model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub kind: RegressionKind,
    pub features: FeatureBuilder,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub transform: ValueTransform,
    pub interval: i64,
    pub last_timestamp: i64,
    /// Last `aw` training values, original scale, oldest first.
    pub tail: Vec<f64>,
}

impl RegressionModel {
    pub fn aw(&self) -> usize {
        self.features.aw
    }

    pub fn config(&self) -> &TimeFeatureConfig {
        &self.features.config
    }

    /// Prediction on the transformed scale for a raw-scale lag window.
    fn linear_predict(&self, timestamp: i64, window: Option<&[f64]>) -> Result<f64> {
        let transformed: Option<Vec<f64>> = window.map(|w| w.iter().map(|&v| self.transform.forward(v)).collect());
        self.linear_predict_transformed(timestamp, transformed.as_deref())
    }

    /// Like `linear_predict` with the lag window already in model space.
    fn linear_predict_transformed(&self, timestamp: i64, window: Option<&[f64]>) -> Result<f64> {
        let fb = &self.features;
        let got = window.map_or(0, <[f64]>::len);
        if got != fb.aw {
            return Err(Error::Arity { expected: fb.aw, got });
        }
        let cfg = &fb.config;
        let mut z = self.intercept;
        let mut col = 0;
        if cfg.trend {
            z += self.weights[0] * (timestamp - fb.origin) as f64 / fb.span as f64;
            col = 1;
        }
        for &group in &cfg.groups {
            z += self.weights[col + cfg.level_of(group, timestamp)];
            col += group.levels();
        }
        if let Some(w) = window {
            z += w.iter().zip(&self.weights[col..]).map(|(v, wt)| v * wt).sum::<f64>();
        }
        Ok(z)
    }

    /// Copy of a STAR model whose lag weights are zero.
    pub fn without_lag_weights(&self) -> Self {
        let mut m = self.clone();
        let cal = m.features.config.calendar_width();
        m.weights[cal..].iter_mut().for_each(|w| *w = 0.0);
        m
    }

    /// The trend and calendar part of this model as an STD model.
    pub fn calendar_part(&self) -> Self {
        let mut m = self.clone();
        let cal = m.features.config.calendar_width();
        m.weights.truncate(cal);
        m.features.aw = 0;
        m.kind = RegressionKind::Std;
        m.tail.clear();
        m
    }
}

fn fit_joint(
    train: &TimeSeries,
    config: TimeFeatureConfig,
    aw: usize,
    lambda: f64,
    transform: ValueTransform,
) -> Result<RegressionModel> {
    let features = FeatureBuilder::for_training(config, train, aw);
    let width = features.width();
    let n = train.len();
    let rows = n.saturating_sub(aw);
    if rows < width + 1 {
        return Err(Error::InsufficientData {
            needed: aw + width + 1,
            got: n,
        });
    }
    let z: Vec<f64> = train.values().iter().map(|&y| transform.forward(y)).collect();
    let mut design = Vec::with_capacity(rows * width);
    for t in aw..n {
        let window = (aw > 0).then(|| &z[t - aw..t]);
        features.build(train.timestamps()[t], window)?.write_row(&mut design);
    }
    let (weights, intercept) = ridge_solve_flat(&design, width, &z[aw..], lambda)?;
    Ok(RegressionModel {
        kind: if aw == 0 {
            RegressionKind::Std
        } else {
            RegressionKind::Star
        },
        features,
        weights,
        intercept,
        lambda,
        transform,
        interval: train.interval(),
        last_timestamp: train.last_timestamp(),
        tail: train.values()[n - aw..].to_vec(),
    })
}

pub fn std_fit(
    train: &TimeSeries,
    config: TimeFeatureConfig,
    lambda: f64,
    transform: ValueTransform,
) -> Result<RegressionModel> {
    if config.calendar_width() == 0 {
        return Err(Error::InvalidParameter(
            "STD needs the trend or at least one calendar group".into(),
        ));
    }
    fit_joint(train, config, 0, lambda, transform)
}

/// Predictions at arbitrary timestamps; no feedback is involved.
pub fn std_predict(model: &RegressionModel, timestamps: &[i64]) -> Result<Vec<f64>> {
    if model.kind != RegressionKind::Std {
        return Err(Error::InvalidParameter("std_predict needs an STD model".into()));
    }
    timestamps
        .iter()
        .map(|&t| model.linear_predict(t, None).map(|z| model.transform.inverse(z)))
        .collect()
}

pub fn star_fit(
    train: &TimeSeries,
    config: TimeFeatureConfig,
    aw: usize,
    lambda: f64,
    transform: ValueTransform,
) -> Result<RegressionModel> {
    if aw == 0 {
        return Err(Error::InvalidParameter(
            "STAR needs an autoregression window of at least 1".into(),
        ));
    }
    fit_joint(train, config, aw, lambda, transform)
}

/// One-step STAR prediction from the `aw` most recent values, oldest first.
pub fn star_predict_one(model: &RegressionModel, timestamp: i64, recent_window: &[f64]) -> Result<f64> {
    if model.kind != RegressionKind::Star {
        return Err(Error::InvalidParameter("star_predict_one needs a STAR model".into()));
    }
    model
        .linear_predict(timestamp, Some(recent_window))
        .map(|z| model.transform.inverse(z))
}

/// Rolling state: the next timestamp and the lag window in model space
/// (after the value transform).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionState {
    pub next_timestamp: i64,
    pub window: Vec<f64>,
}

impl SteppableForecaster for RegressionModel {
    type State = RegressionState;

    fn final_state(&self) -> RegressionState {
        RegressionState {
            next_timestamp: self.last_timestamp + self.interval,
            window: self.tail.iter().map(|&v| self.transform.forward(v)).collect(),
        }
    }

    fn replay_start(&self, train: &TimeSeries) -> Result<(RegressionState, usize)> {
        let aw = self.aw();
        if train.len() <= aw {
            return Err(Error::InsufficientData {
                needed: aw + 1,
                got: train.len(),
            });
        }
        Ok((
            RegressionState {
                next_timestamp: train.timestamps()[aw],
                window: train.values()[..aw]
                    .iter()
                    .map(|&v| self.transform.forward(v))
                    .collect(),
            },
            aw,
        ))
    }

    fn predict_one(&self, state: &RegressionState) -> f64 {
        let window = (self.aw() > 0).then_some(state.window.as_slice());
        // window length is maintained by update_with_value
        let z = self
            .linear_predict_transformed(state.next_timestamp, window)
            .expect("window matches aw");
        self.transform.inverse(z)
    }

    fn update_with_value(&self, state: &mut RegressionState, value: f64) {
        if !state.window.is_empty() {
            state.window.rotate_left(1);
            *state.window.last_mut().expect("nonempty") = self.transform.forward(value);
        }
        state.next_timestamp += self.interval;
    }

    fn native_path(&self, state: &RegressionState, horizon: usize) -> Option<Vec<f64>> {
        if self.kind != RegressionKind::Std {
            return None;
        }
        let timestamps: Vec<i64> = (0..horizon as i64)
            .map(|h| state.next_timestamp + h * self.interval)
            .collect();
        std_predict(self, &timestamps).ok()
    }
}
