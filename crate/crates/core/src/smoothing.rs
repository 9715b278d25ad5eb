//! Exponential smoothing: SES, Holt's linear trend and additive Holt-Winters.
//!
//! All three share one state layout ([`SmoothingState`]) and one pair of
//! primitives, [`predict_one`] and [`update_state`]. Closed-form multi-step
//! paths come from [`forecast_path`]; they coincide with feeding the model's
//! own predictions back through `update_state`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::SteppableForecaster;
use crate::series::TimeSeries;

/// Lattice step used when smoothing parameters are selected automatically.
pub const GRID_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SmoothingKind {
    Ses,
    Holt,
    HoltWinters { period: usize },
}

impl SmoothingKind {
    pub fn period(&self) -> usize {
        match self {
            SmoothingKind::HoltWinters { period } => *period,
            _ => 0,
        }
    }

    /// Smallest training length the initialization accepts.
    pub fn min_train_len(&self) -> usize {
        match self {
            SmoothingKind::Ses | SmoothingKind::Holt => 2,
            SmoothingKind::HoltWinters { period } => 2 * period,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SmoothingKind::HoltWinters { period } if *period < 2 => Err(Error::InvalidParameter(format!(
                "seasonal period must be at least 2, got {period}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Smoothing weights. `beta` is ignored by SES and `gamma` by SES and Holt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl SmoothingParams {
    pub fn ses(alpha: f64) -> Self {
        Self {
            alpha,
            beta: 0.0,
            gamma: 0.0,
        }
    }

    pub fn holt(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma: 0.0,
        }
    }

    pub fn holt_winters(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Level, trend and seasonal components after some number of observations.
///
/// `seasonals` is a ring indexed by `step_index % period`: the slot for the
/// next observation holds the seasonal component from one period earlier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingState {
    pub level: f64,
    pub trend: f64,
    pub seasonals: Vec<f64>,
    pub step_index: usize,
}

impl SmoothingState {
    pub fn new(level: f64, trend: f64, seasonals: Vec<f64>) -> Self {
        Self {
            level,
            trend,
            seasonals,
            step_index: 0,
        }
    }

    /// Seasonal component applying to the next observation, 0 without seasonality.
    pub fn upcoming_seasonal(&self) -> f64 {
        self.seasonal_at(0)
    }

    fn seasonal_at(&self, ahead: usize) -> f64 {
        if self.seasonals.is_empty() {
            0.0
        } else {
            self.seasonals[(self.step_index + ahead) % self.seasonals.len()]
        }
    }
}

pub fn predict_one(state: &SmoothingState, kind: SmoothingKind) -> f64 {
    match kind {
        SmoothingKind::Ses => state.level,
        SmoothingKind::Holt => state.level + state.trend,
        SmoothingKind::HoltWinters { .. } => state.level + state.trend + state.upcoming_seasonal(),
    }
}

/// Applies one observation to `state` in place.
pub fn apply_observation(state: &mut SmoothingState, kind: SmoothingKind, params: &SmoothingParams, observed: f64) {
    let SmoothingParams { alpha, beta, gamma } = *params;
    match kind {
        SmoothingKind::Ses => {
            state.level = alpha * observed + (1.0 - alpha) * state.level;
        }
        SmoothingKind::Holt => {
            let prev = state.level;
            state.level = alpha * observed + (1.0 - alpha) * (prev + state.trend);
            state.trend = beta * (state.level - prev) + (1.0 - beta) * state.trend;
        }
        SmoothingKind::HoltWinters { .. } => {
            let slot = state.step_index % state.seasonals.len();
            let season = state.seasonals[slot];
            let prev = state.level;
            state.level = alpha * (observed - season) + (1.0 - alpha) * (prev + state.trend);
            state.trend = beta * (state.level - prev) + (1.0 - beta) * state.trend;
            state.seasonals[slot] = gamma * (observed - state.level) + (1.0 - gamma) * season;
        }
    }
    state.step_index += 1;
}

pub fn update_state(
    state: &SmoothingState,
    kind: SmoothingKind,
    params: &SmoothingParams,
    observed: f64,
) -> SmoothingState {
    let mut next = state.clone();
    apply_observation(&mut next, kind, params, observed);
    next
}

/// Closed-form `horizon`-step path from `state`.
pub fn forecast_path(state: &SmoothingState, kind: SmoothingKind, horizon: usize) -> Vec<f64> {
    (1..=horizon)
        .map(|h| match kind {
            SmoothingKind::Ses => state.level,
            SmoothingKind::Holt => state.level + h as f64 * state.trend,
            SmoothingKind::HoltWinters { .. } => state.level + h as f64 * state.trend + state.seasonal_at(h - 1),
        })
        .collect()
}

/// Deterministic starting state and the index of the first observation it
/// has not consumed.
///
/// SES starts at the first observation. Holt takes the first difference as
/// its trend and has consumed two points. Holt-Winters uses the first-period
/// mean as level, the per-step change between the first two period means as
/// trend and first-period deviations as seasonals, having consumed one period.
pub fn initial_state(values: &[f64], kind: SmoothingKind) -> Result<(SmoothingState, usize)> {
    kind.validate()?;
    let needed = kind.min_train_len();
    if values.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: values.len(),
        });
    }
    Ok(match kind {
        SmoothingKind::Ses => {
            let mut state = SmoothingState::new(values[0], 0.0, Vec::new());
            state.step_index = 1;
            (state, 1)
        }
        SmoothingKind::Holt => {
            let mut state = SmoothingState::new(values[1], values[1] - values[0], Vec::new());
            state.step_index = 2;
            (state, 2)
        }
        SmoothingKind::HoltWinters { period } => {
            let p = period as f64;
            let first = values[..period].iter().sum::<f64>() / p;
            let second = values[period..2 * period].iter().sum::<f64>() / p;
            let seasonals = values[..period].iter().map(|v| v - first).collect();
            let mut state = SmoothingState::new(first, (second - first) / p, seasonals);
            state.step_index = period;
            (state, period)
        }
    })
}

/// Sum of squared one-step errors while replaying `values` from the initial state.
fn one_step_sse(values: &[f64], kind: SmoothingKind, params: &SmoothingParams, init: &(SmoothingState, usize)) -> f64 {
    let (mut state, start) = (init.0.clone(), init.1);
    let mut sse = 0.0;
    for &y in &values[start..] {
        let e = y - predict_one(&state, kind);
        sse += e * e;
        apply_observation(&mut state, kind, params, y);
    }
    if sse.is_finite() {
        sse
    } else {
        f64::INFINITY
    }
}

fn lattice() -> Vec<f64> {
    let steps = (1.0 / GRID_STEP).round() as usize;
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

/// Exhaustive lattice search minimizing in-sample one-step SSE. Ties go to
/// the earliest lattice point (alpha-major order).
pub fn select_params(values: &[f64], kind: SmoothingKind) -> Result<SmoothingParams> {
    let init = initial_state(values, kind)?;
    let grid = lattice();
    let candidates: Vec<SmoothingParams> = match kind {
        SmoothingKind::Ses => grid.iter().map(|&a| SmoothingParams::ses(a)).collect(),
        SmoothingKind::Holt => grid
            .iter()
            .flat_map(|&a| grid.iter().map(move |&b| SmoothingParams::holt(a, b)))
            .collect(),
        SmoothingKind::HoltWinters { .. } => grid
            .iter()
            .flat_map(|&a| {
                let grid = &grid;
                grid.iter()
                    .flat_map(move |&b| grid.iter().map(move |&g| SmoothingParams::holt_winters(a, b, g)))
            })
            .collect(),
    };
    let (_, best) = candidates
        .par_iter()
        .enumerate()
        .map(|(i, p)| (one_step_sse(values, kind, p, &init), i))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    Ok(candidates[best.min(candidates.len() - 1)])
}

/// A fitted smoothing model: its kind, weights and the state after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingModel {
    pub kind: SmoothingKind,
    pub params: SmoothingParams,
    pub state: SmoothingState,
}

/// Fits `kind` on `train`. Omitted `params` are chosen by [`select_params`].
pub fn smoothing_fit(
    train: &TimeSeries,
    kind: SmoothingKind,
    params: Option<SmoothingParams>,
) -> Result<SmoothingModel> {
    let values = train.values();
    let params = match params {
        Some(p) => {
            p.validate()?;
            p
        }
        None => select_params(values, kind)?,
    };
    let (mut state, start) = initial_state(values, kind)?;
    for &y in &values[start..] {
        apply_observation(&mut state, kind, &params, y);
    }
    Ok(SmoothingModel { kind, params, state })
}

impl SmoothingModel {
    pub fn predict_one(&self) -> f64 {
        predict_one(&self.state, self.kind)
    }

    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        forecast_path(&self.state, self.kind, horizon)
    }
}

impl SteppableForecaster for SmoothingModel {
    type State = SmoothingState;

    fn final_state(&self) -> SmoothingState {
        self.state.clone()
    }

    fn replay_start(&self, train: &TimeSeries) -> Result<(SmoothingState, usize)> {
        initial_state(train.values(), self.kind)
    }

    fn predict_one(&self, state: &SmoothingState) -> f64 {
        predict_one(state, self.kind)
    }

    fn update_with_value(&self, state: &mut SmoothingState, value: f64) {
        apply_observation(state, self.kind, &self.params, value);
    }

    fn native_path(&self, state: &SmoothingState, horizon: usize) -> Option<Vec<f64>> {
        Some(forecast_path(state, self.kind, horizon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::from_values(0, 3600, values).unwrap()
    }

    const HW2: SmoothingKind = SmoothingKind::HoltWinters { period: 2 };

    #[test]
    fn constant_series_fixpoint() {
        let s = series(vec![7.5; 48]);
        for kind in [
            SmoothingKind::Ses,
            SmoothingKind::Holt,
            SmoothingKind::HoltWinters { period: 12 },
        ] {
            let m = smoothing_fit(&s, kind, None).unwrap();
            assert_eq!(m.state.level, 7.5);
            assert_eq!(m.state.trend, 0.0);
            assert!(m.state.seasonals.iter().all(|&v| v == 0.0));
            assert_eq!(m.predict_one(), 7.5);
            assert!(m.forecast(30).iter().all(|&v| v == 7.5));
        }
    }

    #[test]
    fn ses_two_points_by_hand() {
        let m = smoothing_fit(
            &series(vec![0.0, 1.0]),
            SmoothingKind::Ses,
            Some(SmoothingParams::ses(0.5)),
        )
        .unwrap();
        assert_eq!(m.predict_one(), 0.5);
        let (init, start) = initial_state(&[0.0, 1.0], SmoothingKind::Ses).unwrap();
        assert_eq!((init.level, start), (0.0, 1));
    }

    #[test]
    fn holt_tracks_noiseless_line() {
        let values: Vec<f64> = (0..201).map(|t| 3.0 + 2.0 * t as f64).collect();
        let params = SmoothingParams::holt(0.5, 0.5);
        // direct recursion from a deliberately poor start converges to the line
        let mut state = SmoothingState::new(values[0], 0.0, Vec::new());
        for &y in &values[..200] {
            apply_observation(&mut state, SmoothingKind::Holt, &params, y);
        }
        assert!((predict_one(&state, SmoothingKind::Holt) - values[200]).abs() < 1e-6);
        let m = smoothing_fit(&series(values[..200].to_vec()), SmoothingKind::Holt, Some(params)).unwrap();
        assert!((m.predict_one() - values[200]).abs() < 1e-6);
    }

    #[test]
    fn predict_one_by_definition() {
        let ses = SmoothingState::new(5.0, 0.0, vec![]);
        assert_eq!(predict_one(&ses, SmoothingKind::Ses), 5.0);
        let holt = SmoothingState::new(10.0, 2.0, vec![]);
        assert_eq!(predict_one(&holt, SmoothingKind::Holt), 12.0);
        let hw = SmoothingState::new(10.0, 1.0, vec![-3.0, 4.0]);
        assert_eq!(predict_one(&hw, HW2), 8.0);
    }

    #[test]
    fn update_extremes() {
        let s = SmoothingState::new(4.0, 0.0, vec![]);
        assert_eq!(
            update_state(&s, SmoothingKind::Ses, &SmoothingParams::ses(1.0), 7.0).level,
            7.0
        );
        let frozen = update_state(&s, SmoothingKind::Ses, &SmoothingParams::ses(0.0), 100.0);
        assert_eq!(frozen.level, 4.0);
        assert_eq!(frozen.step_index, 1);
    }

    #[test]
    fn holt_winters_single_step_by_hand() {
        let s = SmoothingState::new(1.0, 0.0, vec![0.0, 0.0]);
        let next = update_state(&s, HW2, &SmoothingParams::holt_winters(0.3, 0.3, 0.3), 2.0);
        // l = 0.3*2 + 0.7*1; b = 0.3*(1.3 - 1); s = 0.3*(2 - 1.3)
        assert!((next.level - 1.3).abs() < 1e-12);
        assert!((next.trend - 0.09).abs() < 1e-12);
        assert!((next.seasonals[0] - 0.21).abs() < 1e-12);
        assert_eq!(next.seasonals[1], 0.0);
        assert_eq!(next.step_index, 1);
    }

    #[test]
    fn paths_by_hand() {
        assert_eq!(
            forecast_path(&SmoothingState::new(5.0, 0.0, vec![]), SmoothingKind::Ses, 4),
            vec![5.0; 4]
        );
        assert_eq!(
            forecast_path(&SmoothingState::new(0.0, 1.0, vec![]), SmoothingKind::Holt, 3),
            vec![1.0, 2.0, 3.0]
        );
        let hw = SmoothingState::new(10.0, 0.0, vec![1.0, -1.0]);
        let path = forecast_path(&hw, HW2, 4);
        assert_eq!(path, vec![11.0, 9.0, 11.0, 9.0]);
        // feedback-unrolled oracle
        let params = SmoothingParams::holt_winters(0.4, 0.2, 0.7);
        let mut st = hw.clone();
        for expected in path {
            let y = predict_one(&st, HW2);
            assert!((y - expected).abs() < 1e-12);
            apply_observation(&mut st, HW2, &params, y);
        }
    }

    #[test]
    fn insufficient_data() {
        assert_eq!(
            smoothing_fit(&series(vec![1.0]), SmoothingKind::Ses, None).unwrap_err(),
            Error::InsufficientData { needed: 2, got: 1 }
        );
        assert!(smoothing_fit(&series(vec![1.0; 23]), SmoothingKind::HoltWinters { period: 12 }, None).is_err());
        assert!(smoothing_fit(&series(vec![1.0; 23]), SmoothingKind::HoltWinters { period: 1 }, None).is_err());
    }

    #[test]
    fn rejects_out_of_range_params() {
        let s = series(vec![1.0, 2.0, 3.0]);
        assert!(smoothing_fit(&s, SmoothingKind::Ses, Some(SmoothingParams::ses(1.5))).is_err());
    }

    #[test]
    fn grid_search_is_deterministic() {
        let values: Vec<f64> = (0..96).map(|t| (t as f64 * 0.7).sin() * 3.0 + t as f64 * 0.1).collect();
        let kind = SmoothingKind::HoltWinters { period: 8 };
        let a = select_params(&values, kind).unwrap();
        let b = select_params(&values, kind).unwrap();
        assert_eq!(a, b);
        for v in [a.alpha, a.beta, a.gamma] {
            assert!(((v / GRID_STEP).round() * GRID_STEP - v).abs() < 1e-12);
        }
    }

    fn kinds() -> impl Strategy<Value = SmoothingKind> {
        prop_oneof![
            Just(SmoothingKind::Ses),
            Just(SmoothingKind::Holt),
            (2usize..6).prop_map(|period| SmoothingKind::HoltWinters { period }),
        ]
    }

    proptest! {
        #[test]
        fn path_matches_feedback(kind in kinds(), a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 0.0f64..=1.0,
                                 values in proptest::collection::vec(-50.0f64..50.0, 12..30), horizon in 1usize..40) {
            let params = SmoothingParams::holt_winters(a, b, g);
            let m = smoothing_fit(&series(values), kind, Some(params)).unwrap();
            let path = m.forecast(horizon);
            let mut st = m.state.clone();
            for expected in path {
                let y = predict_one(&st, kind);
                prop_assert!((y - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
                apply_observation(&mut st, kind, &params, y);
            }
        }

        #[test]
        fn shift_and_scale_equivariance(kind in kinds(), a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 0.0f64..=1.0,
                                        values in proptest::collection::vec(-50.0f64..50.0, 12..30),
                                        shift in -100.0f64..100.0, scale in 0.1f64..10.0) {
            let params = SmoothingParams::holt_winters(a, b, g);
            let base = smoothing_fit(&series(values.clone()), kind, Some(params)).unwrap().forecast(10);
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
            let fs = smoothing_fit(&series(shifted), kind, Some(params)).unwrap().forecast(10);
            let fc = smoothing_fit(&series(scaled), kind, Some(params)).unwrap().forecast(10);
            for i in 0..10 {
                prop_assert!((fs[i] - (base[i] + shift)).abs() <= 1e-8 * (1.0 + base[i].abs() + shift.abs()));
                prop_assert!((fc[i] - base[i] * scale).abs() <= 1e-9 * (1.0 + (base[i] * scale).abs()));
            }
        }
    }
}
