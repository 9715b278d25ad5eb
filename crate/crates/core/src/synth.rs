//! Synthetic telemetry archetypes.
//!
//! Four shapes stand in for traffic datasets that cannot be redistributed:
//!
//! * `noisy-levels`: a handful of flow-size levels visited by a sticky
//!   regime process, a faint hourly ripple, and additive noise. Hard to fit;
//!   useful for checking resistance to overfitting.
//! * `daily-seasonal`: a strong sleep/work/evening daily cycle.
//! * `growing-seasonal`: the daily cycle multiplied by exponential growth.
//! * `global-concentrated`: overlapping daily cycles from several time zones,
//!   weighted towards one dominant region.
//!
//! Every archetype starts at [`SYNTH_EPOCH`] (a Monday, 00:00 UTC) and is
//! fully determined by its [`SynthSpec`].

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// 2015-01-05 00:00:00 UTC.
pub const SYNTH_EPOCH: i64 = 1_420_416_000;

const HOUR: i64 = 3_600;
const DAY: i64 = 86_400;

/// Flow-size levels of the `noisy-levels` archetype.
const FLOW_LEVELS: [f64; 4] = [10.0, 25.0, 60.0, 150.0];
/// Probability of staying in the current flow level at each step.
const LEVEL_STICKINESS: f64 = 0.97;
/// Relative amplitude of the hourly ripple on `noisy-levels`.
const HOURLY_RIPPLE: f64 = 0.05;

/// (weight, UTC offset in hours) of each region in `global-concentrated`.
const REGIONS: [(f64, f64); 4] = [(0.55, -5.0), (0.2, 1.0), (0.15, 8.0), (0.1, -8.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    NoisyLevels,
    DailySeasonal,
    GrowingSeasonal,
    GlobalConcentrated,
}

impl Archetype {
    /// Length in seconds of the dominant cycle.
    fn cycle_seconds(self) -> i64 {
        match self {
            Archetype::NoisyLevels => HOUR,
            _ => DAY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub archetype: Archetype,
    pub length: usize,
    /// Sampling interval in seconds.
    pub interval: i64,
    /// Noise standard deviation relative to the archetype's typical cycle swing.
    pub noise_scale: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Number of samples in one seasonal cycle of the archetype.
    pub fn period(&self) -> usize {
        if self.interval <= 0 {
            return 1;
        }
        let cycle = self.archetype.cycle_seconds();
        (((cycle + self.interval / 2) / self.interval).max(1)) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.interval <= 0 {
            return Err(Error::InvalidParameter(format!(
                "interval must be positive, got {}",
                self.interval
            )));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise scale must be finite and non-negative, got {}",
                self.noise_scale
            )));
        }
        let needed = (2 * self.period()).max(2);
        if self.length < needed {
            return Err(Error::InvalidParameter(format!(
                "length {} is shorter than two seasonal periods ({needed})",
                self.length
            )));
        }
        Ok(())
    }
}

/// Daily activity profile over phase in [0, 1): quiet nights, a working-day
/// plateau and an evening peak. Roughly spans [-1, 1].
fn daily_profile(phase: f64) -> f64 {
    let base = -(TAU * phase).cos();
    let evening = (-((phase - 0.85) / 0.06).powi(2)).exp();
    let lunch_dip = (-((phase - 0.54) / 0.04).powi(2)).exp();
    0.75 * base + 0.5 * evening - 0.2 * lunch_dip
}

/// Generates the series described by `spec`.
pub fn synth(spec: &SynthSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let period = spec.period();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.length;

    let values: Vec<f64> = match spec.archetype {
        Archetype::DailySeasonal => (0..n)
            .map(|i| {
                let phase = (i % period) as f64 / period as f64;
                let clean = 100.0 + 50.0 * daily_profile(phase);
                (clean + 50.0 * spec.noise_scale * rng.sample::<f64, _>(StandardNormal)).max(0.0)
            })
            .collect(),
        Archetype::GrowingSeasonal => {
            let rate = 3f64.ln() / n as f64;
            (0..n)
                .map(|i| {
                    let phase = (i % period) as f64 / period as f64;
                    let scale = 100.0 * (rate * i as f64).exp();
                    let clean = scale * (1.0 + 0.4 * daily_profile(phase));
                    (clean + 0.4 * scale * spec.noise_scale * rng.sample::<f64, _>(StandardNormal)).max(0.0)
                })
                .collect()
        }
        Archetype::GlobalConcentrated => (0..n)
            .map(|i| {
                let phase = (i % period) as f64 / period as f64;
                let activity: f64 = REGIONS
                    .iter()
                    .map(|&(weight, offset)| {
                        let local = (phase + offset / 24.0).rem_euclid(1.0);
                        weight * (3.0 * ((TAU * (local - 0.6)).cos() - 1.0)).exp()
                    })
                    .sum();
                let clean = 20.0 + 100.0 * activity;
                (clean + 50.0 * spec.noise_scale * rng.sample::<f64, _>(StandardNormal)).max(0.0)
            })
            .collect(),
        Archetype::NoisyLevels => {
            let mut level = FLOW_LEVELS[0];
            (0..n)
                .map(|i| {
                    if rng.random::<f64>() >= LEVEL_STICKINESS {
                        // heavy requests are rarer than the idle level
                        level = if rng.random::<f64>() < 0.5 {
                            FLOW_LEVELS[0]
                        } else {
                            FLOW_LEVELS[rng.random_range(1..FLOW_LEVELS.len())]
                        };
                    }
                    let phase = (i % period) as f64 / period as f64;
                    let ripple = 1.0 + HOURLY_RIPPLE * (TAU * phase).sin();
                    let eps: f64 = rng.sample(StandardNormal);
                    (level * ripple + FLOW_LEVELS[0] * spec.noise_scale * eps).max(0.0)
                })
                .collect()
        }
    };
    TimeSeries::from_values(SYNTH_EPOCH, spec.interval, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(archetype: Archetype, length: usize, interval: i64, noise_scale: f64, seed: u64) -> SynthSpec {
        SynthSpec {
            archetype,
            length,
            interval,
            noise_scale,
            seed,
        }
    }

    /// Sample autocorrelation by direct summation.
    fn autocorrelation(x: &[f64], lag: usize) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let mut num = 0.0;
        for t in lag..n {
            num += (x[t] - mean) * (x[t - lag] - mean);
        }
        let mut den = 0.0;
        for v in x {
            den += (v - mean) * (v - mean);
        }
        num / den
    }

    #[test]
    fn noiseless_daily_is_periodic() {
        let s = synth(&spec(Archetype::DailySeasonal, 48, 3600, 0.0, 3)).unwrap();
        assert_eq!(&s.values()[..24], &s.values()[24..]);
    }

    #[test]
    fn deterministic_for_seed() {
        for archetype in [
            Archetype::NoisyLevels,
            Archetype::DailySeasonal,
            Archetype::GrowingSeasonal,
            Archetype::GlobalConcentrated,
        ] {
            let sp = spec(archetype, 500, 900, 0.2, 11);
            let a = synth(&sp).unwrap();
            let b = synth(&sp).unwrap();
            assert_eq!(a, b);
            let other = synth(&SynthSpec { seed: 12, ..sp }).unwrap();
            assert_ne!(a.values(), other.values());
        }
    }

    #[test]
    fn daily_lag_autocorrelation() {
        let s = synth(&spec(Archetype::DailySeasonal, 240, 3600, 0.1, 7)).unwrap();
        assert_eq!(spec(Archetype::DailySeasonal, 240, 3600, 0.1, 7).period(), 24);
        assert!(autocorrelation(s.values(), 24) > 0.8);
    }

    #[test]
    fn daily_dominant_frequency_is_daily() {
        let sp = spec(Archetype::DailySeasonal, 24 * 20, 3600, 0.1, 5);
        let s = synth(&sp).unwrap();
        let x = s.values();
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        // direct DFT power; daily cycle sits at bin n / 24 = 20
        let power = |k: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let w = TAU * (k * t) as f64 / n as f64;
                re += (v - mean) * w.cos();
                im -= (v - mean) * w.sin();
            }
            re * re + im * im
        };
        let best = (1..n / 2).max_by(|&a, &b| power(a).total_cmp(&power(b))).unwrap();
        assert_eq!(best, 20);
    }

    #[test]
    fn growing_has_positive_log_slope() {
        let s = synth(&spec(Archetype::GrowingSeasonal, 96 * 60, 900, 0.05, 2)).unwrap();
        let logs: Vec<f64> = s.values().iter().map(|v| v.max(1e-9).ln()).collect();
        let n = logs.len() as f64;
        let tbar = (n - 1.0) / 2.0;
        let ybar = logs.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (t, y) in logs.iter().enumerate() {
            sxy += (t as f64 - tbar) * (y - ybar);
            sxx += (t as f64 - tbar).powi(2);
        }
        assert!(sxy / sxx > 0.0);
    }

    #[test]
    fn noisy_levels_cluster_around_base_levels() {
        let s = synth(&spec(Archetype::NoisyLevels, 5000, 60, 0.0, 9)).unwrap();
        for v in s.values() {
            let near = FLOW_LEVELS.iter().any(|l| (v - l).abs() <= l * HOURLY_RIPPLE + 1e-9);
            assert!(near, "{v} not near any base level");
        }
        let distinct = FLOW_LEVELS
            .iter()
            .filter(|l| s.values().iter().any(|v| (v - *l).abs() <= *l * HOURLY_RIPPLE))
            .count();
        assert!(distinct >= 2);
    }

    #[test]
    fn rejects_too_short() {
        let err = synth(&spec(Archetype::DailySeasonal, 1, 3600, 0.1, 1));
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
        assert!(synth(&spec(Archetype::DailySeasonal, 47, 3600, 0.1, 1)).is_err());
        assert!(synth(&spec(Archetype::DailySeasonal, 48, 3600, -0.1, 1)).is_err());
        assert!(synth(&spec(Archetype::DailySeasonal, 48, 0, 0.1, 1)).is_err());
    }

    #[test]
    fn starts_on_monday_midnight() {
        let s = synth(&spec(Archetype::GlobalConcentrated, 600, 300, 0.1, 1)).unwrap();
        assert_eq!(s.first_timestamp(), SYNTH_EPOCH);
        assert_eq!(SYNTH_EPOCH % DAY, 0);
        // 1970-01-01 was a Thursday
        assert_eq!((SYNTH_EPOCH / DAY + 3) % 7, 0);
        assert!(s.is_regular());
    }
}
