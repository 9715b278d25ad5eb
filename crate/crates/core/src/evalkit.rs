//! Forecast scoring: R², R² of logarithms, and wall-clock timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied before taking logarithms in [`log_r_squared`].
pub const LOG_EPSILON: f64 = 1e-9;

/// Scores of one forecasting run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub runtime_seconds: f64,
    pub r2: f64,
    pub lr2: f64,
}

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(())
}

/// Coefficient of determination `1 − SSE/SST`, SST taken about the mean of `actual`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(actual, predicted)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let sst: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

/// R² of `ln(max(x, epsilon))` applied element-wise to both inputs.
pub fn log_r_squared(actual: &[f64], predicted: &[f64], epsilon: f64) -> Result<f64> {
    check_lengths(actual, predicted)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let log = |xs: &[f64]| -> Vec<f64> { xs.iter().map(|x| x.max(epsilon).ln()).collect() };
    r_squared(&log(actual), &log(predicted))
}

/// Runs `run` and reports its monotonic wall-clock duration in seconds.
pub fn timed<T>(run: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = run();
    (out, start.elapsed().as_secs_f64())
}
