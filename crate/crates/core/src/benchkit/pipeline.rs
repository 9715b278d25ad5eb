//! Model identifiers, hyperparameter candidates and the fit → forecast pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::generator::{
    compute_residuals, generate, generate_deterministic, reduce, ForecastResult, SteppableForecaster,
};
use crate::regfit::{star_fit, std_fit, RegressionModel, TimeFeatureConfig, ValueTransform};
use crate::series::TimeSeries;
use crate::smoothing::{smoothing_fit, SmoothingKind, SmoothingModel, SmoothingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    Ses,
    Holt,
    Hwes,
    Std,
    Star,
}

impl ModelId {
    pub fn label(self) -> &'static str {
        match self {
            ModelId::Ses => "SES",
            ModelId::Holt => "Holt",
            ModelId::Hwes => "HWES",
            ModelId::Std => "STD",
            ModelId::Star => "STAR",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One concrete hyperparameter setting of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidate {
    /// `params: None` selects weights by in-sample lattice search.
    Smoothing {
        kind: SmoothingKind,
        params: Option<SmoothingParams>,
    },
    Std {
        lambda: f64,
        transform: ValueTransform,
    },
    Star {
        aw: usize,
        lambda: f64,
        transform: ValueTransform,
    },
}

impl Candidate {
    pub fn fit(&self, train: &TimeSeries) -> Result<FittedModel> {
        Ok(match self {
            Candidate::Smoothing { kind, params } => FittedModel::Smoothing(smoothing_fit(train, *kind, *params)?),
            Candidate::Std { lambda, transform } => FittedModel::Regression(std_fit(
                train,
                TimeFeatureConfig::default_for(train),
                *lambda,
                *transform,
            )?),
            Candidate::Star { aw, lambda, transform } => FittedModel::Regression(star_fit(
                train,
                TimeFeatureConfig::default_for(train),
                *aw,
                *lambda,
                *transform,
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Smoothing(SmoothingModel),
    Regression(RegressionModel),
}

fn transform_name(t: ValueTransform) -> &'static str {
    match t {
        ValueTransform::Identity => "identity",
        ValueTransform::Log1p => "log1p",
    }
}

impl FittedModel {
    /// Compact `key=value` description of the fitted hyperparameters.
    pub fn describe(&self) -> String {
        match self {
            FittedModel::Smoothing(m) => {
                let p = m.params;
                match m.kind {
                    SmoothingKind::Ses => format!("alpha={}", p.alpha),
                    SmoothingKind::Holt => format!("alpha={} beta={}", p.alpha, p.beta),
                    SmoothingKind::HoltWinters { period } => {
                        format!("alpha={} beta={} gamma={} period={period}", p.alpha, p.beta, p.gamma)
                    }
                }
            }
            FittedModel::Regression(m) => {
                let head = if m.aw() > 0 {
                    format!("aw={} ", m.aw())
                } else {
                    String::new()
                };
                format!("{head}lambda={:e} transform={}", m.lambda, transform_name(m.transform))
            }
        }
    }
}

/// How a fitted model is turned into a multi-step forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Native closed-form path when the model has one, bootstrap otherwise.
    #[default]
    Auto,
    /// Always bootstrap residuals through stepwise feedback.
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSettings {
    pub horizon: usize,
    pub scenarios: usize,
    pub seed: u64,
    pub quantiles: Vec<f64>,
    pub route: Route,
}

fn forecast_with<F: SteppableForecaster>(
    model: &F,
    train: &TimeSeries,
    s: &ForecastSettings,
) -> Result<ForecastResult> {
    let dist = match s.route {
        Route::Auto if model.native_path(&model.final_state(), 1).is_some() => {
            generate_deterministic(model, s.horizon)?
        }
        _ => {
            let residuals = compute_residuals(model, train)?;
            generate(model, &residuals, s.horizon, s.scenarios, s.seed)?
        }
    };
    reduce(&dist, &s.quantiles)
}

/// Forecast of `settings.horizon` steps after the end of `train`.
pub fn forecast(model: &FittedModel, train: &TimeSeries, settings: &ForecastSettings) -> Result<ForecastResult> {
    match model {
        FittedModel::Smoothing(m) => forecast_with(m, train, settings),
        FittedModel::Regression(m) => forecast_with(m, train, settings),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(horizon: usize, route: Route) -> ForecastSettings {
        ForecastSettings {
            horizon,
            scenarios: 20,
            seed: 3,
            quantiles: vec![0.1, 0.9],
            route,
        }
    }

    #[test]
    fn std_auto_route_is_deterministic_path() {
        let train = TimeSeries::from_values(0, 3_600, (0..200).map(|t| 2.0 * t as f64 + 3.0).collect()).unwrap();
        let model = Candidate::Std {
            lambda: 1e-6,
            transform: ValueTransform::Identity,
        }
        .fit(&train)
        .unwrap();
        let out = forecast(&model, &train, &settings(5, Route::Auto)).unwrap();
        assert_eq!(out.band(0.1).unwrap(), out.point.as_slice());
        assert!((out.point[0] - 403.0).abs() < 1e-3, "{}", out.point[0]);
        assert!(model.describe().contains("lambda=1e-6"));
    }

    #[test]
    fn star_always_bootstraps() {
        let train =
            TimeSeries::from_values(0, 3_600, (0..300).map(|t| ((t % 24) as f64).sin() + 5.0).collect()).unwrap();
        let model = Candidate::Star {
            aw: 4,
            lambda: 1e-2,
            transform: ValueTransform::Log1p,
        }
        .fit(&train)
        .unwrap();
        let out = forecast(&model, &train, &settings(30, Route::Auto)).unwrap();
        assert_eq!(out.point.len(), 30);
        assert!(out.bands[0]
            .values
            .iter()
            .zip(&out.bands[1].values)
            .all(|(lo, hi)| lo <= hi));
        assert_eq!(model.describe(), "aw=4 lambda=1e-2 transform=log1p");
    }
}
