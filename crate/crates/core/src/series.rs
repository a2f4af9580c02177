//! Labeled irregular multivariate series, normalization, splitting and the
//! merged observation grid that drives the encoder.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::nn::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub variable: usize,
    pub time: f64,
    pub value: f64,
}

/// One series: per-variable observation lists sorted strictly increasing in
/// time, all within `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularSeries {
    pub id: String,
    observations: Vec<Vec<Observation>>,
    pub label: usize,
    pub horizon: f64,
    /// Ground-truth signal time, known only for synthetic data.
    pub signal_time: Option<f64>,
}

impl IrregularSeries {
    /// Builds a series from unordered observations, sorting each variable by
    /// time. Duplicate `(variable, time)` pairs, non-finite entries and times
    /// outside `[0, horizon]` are rejected.
    pub fn new(
        id: impl Into<String>,
        num_variables: usize,
        observations: impl IntoIterator<Item = Observation>,
        label: usize,
        horizon: f64,
        signal_time: Option<f64>,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidSeries {
            id: id.clone(),
            reason,
        };
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive and finite, got {horizon}")));
        }
        let mut per_var = vec![Vec::new(); num_variables];
        for obs in observations {
            if obs.variable >= num_variables {
                return Err(invalid(format!(
                    "variable {} out of range for {} variables",
                    obs.variable, num_variables
                )));
            }
            if !obs.time.is_finite() || !obs.value.is_finite() {
                return Err(invalid(format!(
                    "non-finite observation on variable {}",
                    obs.variable
                )));
            }
            if obs.time < 0.0 || obs.time > horizon {
                return Err(invalid(format!(
                    "time {} outside [0, {}]",
                    obs.time, horizon
                )));
            }
            per_var[obs.variable].push(obs);
        }
        for (d, list) in per_var.iter_mut().enumerate() {
            list.sort_by(|a, b| a.time.total_cmp(&b.time));
            if let Some(w) = list.windows(2).find(|w| w[0].time == w[1].time) {
                return Err(invalid(format!(
                    "duplicate time {} on variable {}",
                    w[0].time, d
                )));
            }
        }
        if let Some(s) = signal_time {
            if !s.is_finite() {
                return Err(invalid("non-finite signal time".to_string()));
            }
        }
        Ok(Self {
            id,
            observations: per_var,
            label,
            horizon,
            signal_time,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.observations.len()
    }

    /// Observations of variable `d`, sorted by time.
    pub fn variable(&self, d: usize) -> &[Observation] {
        &self.observations[d]
    }

    pub fn observations(&self) -> impl Iterator<Item = &Observation> {
        self.observations.iter().flatten()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.iter().map(Vec::len).sum()
    }

    /// Same series with every value mapped through `f(variable, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for list in out.observations.iter_mut() {
            for obs in list.iter_mut() {
                obs.value = f(obs.variable, obs.value);
            }
        }
        out
    }
}

/// Per-variable z-scoring statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(num_variables: usize) -> Self {
        Self {
            mean: vec![0.0; num_variables],
            std: vec![1.0; num_variables],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub series: Vec<IrregularSeries>,
    pub num_variables: usize,
    pub num_classes: usize,
    /// Statistics applied by [`apply_normalization`], if any.
    pub normalization: Option<NormStats>,
}

impl Dataset {
    pub fn new(series: Vec<IrregularSeries>, num_variables: usize, num_classes: usize) -> Result<Self> {
        for s in &series {
            if s.label >= num_classes {
                return Err(Error::InvalidDataset(format!(
                    "series {} has label {} but only {} classes",
                    s.id, s.label, num_classes
                )));
            }
            if s.num_variables() != num_variables {
                return Err(Error::InvalidDataset(format!(
                    "series {} has {} variables, dataset has {}",
                    s.id,
                    s.num_variables(),
                    num_variables
                )));
            }
        }
        Ok(Self {
            series,
            num_variables,
            num_classes,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.series.iter().map(|s| s.label).collect()
    }

    fn with_series(&self, series: Vec<IrregularSeries>) -> Self {
        Self {
            series,
            num_variables: self.num_variables,
            num_classes: self.num_classes,
            normalization: self.normalization.clone(),
        }
    }
}

/// Mean and population standard deviation per variable over all
/// observations. Unobserved or constant variables fall back to a unit
/// standard deviation (and zero mean when unobserved).
pub fn fit_normalization(train: &Dataset) -> NormStats {
    let d = train.num_variables;
    let mut count = vec![0usize; d];
    let mut sum = vec![0.0; d];
    for obs in train.series.iter().flat_map(|s| s.observations()) {
        count[obs.variable] += 1;
        sum[obs.variable] += obs.value;
    }
    let mean: Vec<f64> = (0..d)
        .map(|i| if count[i] > 0 { sum[i] / count[i] as f64 } else { 0.0 })
        .collect();
    let mut sq = vec![0.0; d];
    for obs in train.series.iter().flat_map(|s| s.observations()) {
        let dev = obs.value - mean[obs.variable];
        sq[obs.variable] += dev * dev;
    }
    let std = (0..d)
        .map(|i| {
            if count[i] == 0 {
                return 1.0;
            }
            let s = math::sqrt(sq[i] / count[i] as f64);
            if s > 0.0 && s.is_finite() {
                s
            } else {
                1.0
            }
        })
        .collect();
    NormStats { mean, std }
}

/// Replaces every value by `(value - mean) / std` of its variable.
pub fn apply_normalization(ds: &Dataset, stats: &NormStats) -> Result<Dataset> {
    if stats.mean.len() != ds.num_variables || stats.std.len() != ds.num_variables {
        return Err(Error::DimensionMismatch {
            context: "normalization stats",
            expected: ds.num_variables,
            actual: stats.mean.len().min(stats.std.len()),
        });
    }
    let series = ds
        .series
        .iter()
        .map(|s| s.map_values(|d, v| (v - stats.mean[d]) / stats.std[d]))
        .collect();
    let mut out = ds.with_series(series);
    out.normalization = Some(stats.clone());
    Ok(out)
}

/// Random disjoint partition. The first part receives
/// `round(n * train_fraction)` series, clamped to `[1, n - 1]`; both parts
/// keep the original relative order.
pub fn split_random(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    if n < 2 {
        return Err(Error::InvalidDataset(format!(
            "cannot split {n} series into two non-empty parts"
        )));
    }
    let n_train = (math::round(n as f64 * train_fraction) as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut order);
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (mut a, mut b) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (s, keep) in ds.series.iter().zip(&in_train) {
        if *keep {
            a.push(s.clone());
        } else {
            b.push(s.clone());
        }
    }
    Ok((ds.with_series(a), ds.with_series(b)))
}

/// One instant of the merged grid: `values[d]` is meaningful only where
/// `mask[d]` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub time: f64,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Union of all variables' observation times, strictly increasing, with a
/// mask recording which variables were observed at each instant.
pub fn union_time_grid(series: &IrregularSeries) -> Vec<GridPoint> {
    let d = series.num_variables();
    let mut all: Vec<&Observation> = series.observations().collect();
    all.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.variable.cmp(&b.variable)));
    let mut grid: Vec<GridPoint> = Vec::new();
    for obs in all {
        match grid.last_mut() {
            Some(last) if last.time == obs.time => {
                last.values[obs.variable] = obs.value;
                last.mask[obs.variable] = true;
            }
            _ => {
                let mut values = vec![0.0; d];
                let mut mask = vec![false; d];
                values[obs.variable] = obs.value;
                mask[obs.variable] = true;
                grid.push(GridPoint {
                    time: obs.time,
                    values,
                    mask,
                });
            }
        }
    }
    grid
}
