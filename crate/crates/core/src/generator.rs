//! Arbitrary-horizon probabilistic forecasts from single-step forecasters.
//!
//! A [`SteppableForecaster`] predicts one value ahead and accepts a value to
//! advance its state. [`generate`] rolls such a forecaster forward, adding a
//! residual drawn from its in-sample one-step errors at every step and
//! feeding the noisy value back, once per scenario. [`reduce`] collapses the
//! scenario matrix into a point forecast and per-step quantile bands.
//!
//! Forecasters that model the output directly as a function of time expose a
//! `native_path`; [`generate_deterministic`] wraps it as a one-row
//! distribution whose bands coincide with the path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const DEFAULT_SCENARIOS: usize = 200;
pub const DEFAULT_QUANTILES: [f64; 4] = [0.05, 0.25, 0.75, 0.95];

/// A fitted model that can be rolled forward one step at a time.
///
/// The model itself is immutable; all mutable information lives in `State`,
/// so cloning a state yields a fully independent simulation.
pub trait SteppableForecaster: Sync {
    type State: Clone + Send + Sync;

    /// State after consuming the whole training series.
    fn final_state(&self) -> Self::State;

    /// State positioned before `train[k]`, together with `k`. Observations
    /// before `k` are initialization warm-up and produce no residuals.
    fn replay_start(&self, train: &TimeSeries) -> Result<(Self::State, usize)>;

    fn predict_one(&self, state: &Self::State) -> f64;

    fn update_with_value(&self, state: &mut Self::State, value: f64);

    /// Closed-form path from `state`, for forecasters that have one.
    fn native_path(&self, _state: &Self::State, _horizon: usize) -> Option<Vec<f64>> {
        None
    }
}

/// In-sample one-step-ahead errors `y_t - ŷ_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStore {
    residuals: Vec<f64>,
}

impl ResidualStore {
    pub fn new(residuals: Vec<f64>) -> Result<Self> {
        if residuals.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if residuals.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("residuals must be finite".into()));
        }
        Ok(Self { residuals })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            residuals: vec![0.0; n.max(1)],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.residuals
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// Replays `train` through a fresh state and records one-step errors.
pub fn compute_residuals<F: SteppableForecaster>(forecaster: &F, train: &TimeSeries) -> Result<ResidualStore> {
    let (mut state, start) = forecaster.replay_start(train)?;
    let values = train.values();
    if start >= values.len() {
        return Err(Error::InsufficientData {
            needed: start + 1,
            got: values.len(),
        });
    }
    let residuals = values[start..]
        .iter()
        .map(|&y| {
            let r = y - forecaster.predict_one(&state);
            forecaster.update_with_value(&mut state, y);
            r
        })
        .collect();
    ResidualStore::new(residuals)
}

/// Simulated futures, one row per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDistribution {
    /// Row-major `n_scenarios × horizon`.
    scenarios: Vec<f64>,
    n_scenarios: usize,
    horizon: usize,
    seed: u64,
}

impl ForecastDistribution {
    pub fn from_rows(rows: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let n_scenarios = rows.len();
        let horizon = rows.first().map_or(0, Vec::len);
        if n_scenarios == 0 || horizon == 0 {
            return Err(Error::InvalidParameter(
                "distribution needs at least one step and one scenario".into(),
            ));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != horizon) {
            return Err(Error::LengthMismatch(horizon, bad.len()));
        }
        let scenarios: Vec<f64> = rows.into_iter().flatten().collect();
        if scenarios.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("scenario values must be finite".into()));
        }
        Ok(Self {
            scenarios,
            n_scenarios,
            horizon,
            seed,
        })
    }

    pub fn n_scenarios(&self) -> usize {
        self.n_scenarios
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, scenario: usize) -> &[f64] {
        &self.scenarios[scenario * self.horizon..(scenario + 1) * self.horizon]
    }

    pub fn column(&self, step: usize) -> Vec<f64> {
        (0..self.n_scenarios)
            .map(|b| self.scenarios[b * self.horizon + step])
            .collect()
    }
}

/// Seed of scenario `index`; independent of the order scenarios run in.
pub fn scenario_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// One bootstrapped future starting from `start`.
pub fn simulate_scenario<F: SteppableForecaster>(
    forecaster: &F,
    start: &F::State,
    residuals: &ResidualStore,
    horizon: usize,
    seed: u64,
    index: usize,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed(seed, index));
    let mut state = start.clone();
    let pool = residuals.as_slice();
    (0..horizon)
        .map(|_| {
            let y = forecaster.predict_one(&state) + pool[rng.random_range(0..pool.len())];
            forecaster.update_with_value(&mut state, y);
            y
        })
        .collect()
}

/// Bootstrapped-residual scenarios from the forecaster's post-training state.
pub fn generate<F: SteppableForecaster>(
    forecaster: &F,
    residuals: &ResidualStore,
    horizon: usize,
    n_scenarios: usize,
    seed: u64,
) -> Result<ForecastDistribution> {
    if horizon == 0 || n_scenarios == 0 {
        return Err(Error::InvalidParameter(format!(
            "horizon and scenario count must be positive, got {horizon} and {n_scenarios}"
        )));
    }
    let start = forecaster.final_state();
    let rows: Vec<Vec<f64>> = (0..n_scenarios)
        .into_par_iter()
        .map(|b| simulate_scenario(forecaster, &start, residuals, horizon, seed, b))
        .collect();
    ForecastDistribution::from_rows(rows, seed)
}

/// Single-row distribution holding the forecaster's native path.
pub fn generate_deterministic<F: SteppableForecaster>(forecaster: &F, horizon: usize) -> Result<ForecastDistribution> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let path = forecaster
        .native_path(&forecaster.final_state(), horizon)
        .ok_or_else(|| Error::InvalidParameter("forecaster has no native path".into()))?;
    ForecastDistribution::from_rows(vec![path], 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointReduction {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub level: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub point: Vec<f64>,
    /// Sorted by ascending level.
    pub bands: Vec<Band>,
}

impl ForecastResult {
    pub fn band(&self, level: f64) -> Option<&[f64]> {
        self.bands
            .iter()
            .find(|b| b.level == level)
            .map(|b| b.values.as_slice())
    }
}

/// Empirical quantile of sorted data, interpolating linearly between order
/// statistics at position `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mean that is exact when all values are equal.
fn stable_mean(values: &[f64]) -> f64 {
    let anchor = values[0];
    anchor + values.iter().map(|v| v - anchor).sum::<f64>() / values.len() as f64
}

pub fn reduce(dist: &ForecastDistribution, levels: &[f64]) -> Result<ForecastResult> {
    reduce_with(dist, levels, PointReduction::Mean)
}

pub fn reduce_with(dist: &ForecastDistribution, levels: &[f64], point: PointReduction) -> Result<ForecastResult> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one quantile level is required".into(),
        ));
    }
    if let Some(q) = levels.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(Error::InvalidParameter(format!("quantile level {q} outside (0, 1)")));
    }
    let mut sorted_levels = levels.to_vec();
    sorted_levels.sort_by(f64::total_cmp);
    sorted_levels.dedup();

    let columns: Vec<Vec<f64>> = (0..dist.horizon())
        .map(|h| {
            let mut c = dist.column(h);
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    let point = columns
        .iter()
        .map(|c| match point {
            PointReduction::Mean => stable_mean(c),
            PointReduction::Median => quantile_sorted(c, 0.5),
        })
        .collect();
    let bands = sorted_levels
        .into_iter()
        .map(|level| Band {
            level,
            values: columns.iter().map(|c| quantile_sorted(c, level)).collect(),
        })
        .collect();
    Ok(ForecastResult { point, bands })
}
