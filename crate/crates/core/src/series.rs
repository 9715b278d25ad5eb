//! Uniformly sampled univariate series, holdout splitting and grid regularization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A univariate series with integer epoch-second timestamps.
///
/// Timestamps are strictly increasing and every value is finite. The series
/// carries its nominal sampling `interval`; [`regularize`] guarantees that
/// consecutive timestamps are exactly one interval apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    timestamps: Vec<i64>,
    values: Vec<f64>,
    interval: i64,
}

impl TimeSeries {
    pub fn new(timestamps: Vec<i64>, values: Vec<f64>, interval: i64) -> Result<Self> {
        if timestamps.is_empty() {
            return Err(Error::InvalidSeries("series must contain at least one point".into()));
        }
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch(timestamps.len(), values.len()));
        }
        if interval <= 0 {
            return Err(Error::InvalidSeries(format!(
                "interval must be positive, got {interval}"
            )));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries(format!(
                "timestamps not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value {} at t={}",
                values[i], timestamps[i]
            )));
        }
        Ok(Self {
            timestamps,
            values,
            interval,
        })
    }

    /// Builds a uniform series starting at `start`.
    pub fn from_values(start: i64, interval: i64, values: Vec<f64>) -> Result<Self> {
        let timestamps = (0..values.len() as i64).map(|i| start + i * interval).collect();
        Self::new(timestamps, values, interval)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interval(&self) -> i64 {
        self.interval
    }

    pub fn first_timestamp(&self) -> i64 {
        self.timestamps[0]
    }

    pub fn last_timestamp(&self) -> i64 {
        self.timestamps[self.timestamps.len() - 1]
    }

    /// True when every step equals the nominal interval.
    pub fn is_regular(&self) -> bool {
        self.timestamps.windows(2).all(|w| w[1] - w[0] == self.interval)
    }

    /// Timestamps of the `horizon` grid slots following the last observation.
    pub fn future_timestamps(&self, horizon: usize) -> Vec<i64> {
        let last = self.last_timestamp();
        (1..=horizon as i64).map(|h| last + h * self.interval).collect()
    }

    /// Contiguous sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidSeries(format!(
                "slice {start}..{end} out of range for length {}",
                self.len()
            )));
        }
        Ok(Self {
            timestamps: self.timestamps[start..end].to_vec(),
            values: self.values[start..end].to_vec(),
            interval: self.interval,
        })
    }

    /// Appends `other`, which must start strictly after this series ends.
    pub fn concat(&self, other: &TimeSeries) -> Result<Self> {
        let mut timestamps = self.timestamps.clone();
        timestamps.extend_from_slice(&other.timestamps);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::new(timestamps, values, self.interval)
    }
}

/// Train/test partition of a series; the test segment is the trailing block.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSplit {
    pub train: TimeSeries,
    pub test: TimeSeries,
}

/// Reserves the last `n_test` points for evaluation.
pub fn split_holdout(series: &TimeSeries, n_test: usize) -> Result<HoldoutSplit> {
    let len = series.len();
    if n_test == 0 || n_test >= len {
        return Err(Error::InvalidSplit { n_test, len });
    }
    let cut = len - n_test;
    Ok(HoldoutSplit {
        train: series.slice(0, cut)?,
        test: series.slice(cut, len)?,
    })
}

/// How empty grid slots are filled by [`regularize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GapPolicy {
    ForwardFill,
    #[default]
    LinearInterpolate,
    Error,
}

/// Resamples `series` onto the grid `first + k * interval`.
///
/// Each source point snaps to its nearest slot (ties round up). Two points
/// landing in one slot is an error; empty slots are filled per `policy`.
pub fn regularize(series: &TimeSeries, interval: i64, policy: GapPolicy) -> Result<TimeSeries> {
    if interval <= 0 {
        return Err(Error::InvalidParameter(format!(
            "interval must be positive, got {interval}"
        )));
    }
    let origin = series.first_timestamp();
    let slot_of = |t: i64| (t - origin + interval / 2) / interval;
    let n_slots = slot_of(series.last_timestamp()) as usize + 1;

    let mut slots: Vec<Option<(i64, f64)>> = vec![None; n_slots];
    for (&t, &v) in series.timestamps().iter().zip(series.values()) {
        let k = slot_of(t);
        let slot = &mut slots[k as usize];
        if let Some((prev, _)) = *slot {
            return Err(Error::Ambiguous {
                first: prev,
                second: t,
                slot: origin + k * interval,
            });
        }
        *slot = Some((t, v));
    }

    let mut values = Vec::with_capacity(n_slots);
    let mut last_filled: Option<usize> = None;
    for k in 0..n_slots {
        match slots[k] {
            Some((_, v)) => {
                values.push(v);
                last_filled = Some(k);
            }
            None => {
                // slot 0 is always occupied by the first point
                let prev = last_filled.expect("first slot occupied");
                let v = match policy {
                    GapPolicy::Error => {
                        return Err(Error::Gap {
                            timestamp: origin + k as i64 * interval,
                        });
                    }
                    GapPolicy::ForwardFill => values[prev],
                    GapPolicy::LinearInterpolate => {
                        let next = (k + 1..n_slots)
                            .find(|&j| slots[j].is_some())
                            .expect("last slot occupied");
                        let left = slots[prev].expect("occupied").1;
                        let right = slots[next].expect("occupied").1;
                        let frac = (k - prev) as f64 / (next - prev) as f64;
                        left + (right - left) * frac
                    }
                };
                values.push(v);
            }
        }
    }
    TimeSeries::from_values(origin, interval, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(len: usize) -> TimeSeries {
        TimeSeries::from_values(1_000, 60, (0..len).map(|i| (i * i) as f64 * 0.5).collect()).unwrap()
    }

    #[test]
    fn rejects_bad_series() {
        assert!(TimeSeries::new(vec![], vec![], 60).is_err());
        assert!(TimeSeries::new(vec![0, 0], vec![1.0, 2.0], 60).is_err());
        assert!(TimeSeries::new(vec![0, 60], vec![1.0, f64::NAN], 60).is_err());
        assert!(TimeSeries::new(vec![0, 60], vec![1.0], 60).is_err());
        assert!(TimeSeries::new(vec![0], vec![1.0], 0).is_err());
    }

    #[test]
    fn split_half_year_hourly() {
        let s = uniform(8760);
        let split = split_holdout(&s, 4380).unwrap();
        assert_eq!(split.train.len(), 4380);
        assert_eq!(split.test.len(), 4380);
    }

    #[test]
    fn split_minimal() {
        let s = uniform(2);
        let split = split_holdout(&s, 1).unwrap();
        assert_eq!((split.train.len(), split.test.len()), (1, 1));
    }

    #[test]
    fn split_boundary_is_contiguous() {
        let s = uniform(6000);
        let split = split_holdout(&s, 1000).unwrap();
        assert_eq!(split.train.len(), 5000);
        assert_eq!(
            split.train.last_timestamp() + s.interval(),
            split.test.first_timestamp()
        );
        // index arithmetic: point 5000 sits at start + 5000 * interval
        assert_eq!(split.test.first_timestamp(), 1_000 + 5000 * 60);
    }

    #[test]
    fn split_out_of_range() {
        let s = uniform(10);
        assert_eq!(split_holdout(&s, 0), Err(Error::InvalidSplit { n_test: 0, len: 10 }));
        assert_eq!(split_holdout(&s, 10), Err(Error::InvalidSplit { n_test: 10, len: 10 }));
    }

    #[test]
    fn regularize_fixpoint_on_uniform() {
        let s = uniform(50);
        for policy in [GapPolicy::ForwardFill, GapPolicy::LinearInterpolate, GapPolicy::Error] {
            assert_eq!(regularize(&s, 60, policy).unwrap(), s);
        }
    }

    #[test]
    fn regularize_interpolates_gap() {
        let s = TimeSeries::new(vec![0, 60, 180], vec![1.0, 2.0, 4.0], 60).unwrap();
        let r = regularize(&s, 60, GapPolicy::LinearInterpolate).unwrap();
        assert_eq!(r.timestamps(), &[0, 60, 120, 180]);
        assert_eq!(r.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn regularize_forward_fill() {
        let s = TimeSeries::new(vec![0, 60, 240], vec![1.0, 2.0, 4.0], 60).unwrap();
        let r = regularize(&s, 60, GapPolicy::ForwardFill).unwrap();
        assert_eq!(r.values(), &[1.0, 2.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn regularize_gap_error_names_missing_slot() {
        let s = TimeSeries::new(vec![0, 120], vec![1.0, 2.0], 60).unwrap();
        assert_eq!(regularize(&s, 60, GapPolicy::Error), Err(Error::Gap { timestamp: 60 }));
    }

    #[test]
    fn regularize_snaps_and_detects_collisions() {
        let s = TimeSeries::new(vec![0, 58, 125], vec![1.0, 2.0, 3.0], 60).unwrap();
        let r = regularize(&s, 60, GapPolicy::Error).unwrap();
        assert_eq!(r.timestamps(), &[0, 60, 120]);
        assert_eq!(r.values(), &[1.0, 2.0, 3.0]);

        let clash = TimeSeries::new(vec![0, 50, 70], vec![1.0, 2.0, 3.0], 60).unwrap();
        assert!(matches!(
            regularize(&clash, 60, GapPolicy::LinearInterpolate),
            Err(Error::Ambiguous { slot: 60, .. })
        ));
    }

    fn irregular() -> impl Strategy<Value = TimeSeries> {
        proptest::collection::vec((1i64..5, -100.0f64..100.0), 1..40).prop_map(|steps| {
            let mut t = 0;
            let mut ts = Vec::new();
            let mut vs = Vec::new();
            for (k, v) in steps {
                ts.push(t);
                vs.push(v);
                t += k * 60;
            }
            TimeSeries::new(ts, vs, 60).unwrap()
        })
    }

    proptest! {
        #[test]
        fn split_then_concat_is_identity(len in 2usize..200, frac in 0.0f64..1.0) {
            let s = uniform(len);
            let n_test = 1 + ((len - 2) as f64 * frac) as usize;
            let split = split_holdout(&s, n_test).unwrap();
            prop_assert!(split.train.last_timestamp() < split.test.first_timestamp());
            prop_assert_eq!(split.train.concat(&split.test).unwrap(), s);
        }

        #[test]
        fn regularize_idempotent_and_preserves_grid_points(s in irregular()) {
            for policy in [GapPolicy::ForwardFill, GapPolicy::LinearInterpolate] {
                let once = regularize(&s, 60, policy).unwrap();
                prop_assert!(once.is_regular());
                prop_assert_eq!(regularize(&once, 60, policy).unwrap(), once.clone());
                for (t, v) in s.timestamps().iter().zip(s.values()) {
                    let k = ((t - once.first_timestamp()) / 60) as usize;
                    prop_assert_eq!(once.values()[k], *v);
                }
            }
        }
    }
}
