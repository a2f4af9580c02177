//! Synthetic univariate datasets with a single informative observation.
//!
//! Each series lives on `[0, 1]`. It has `t - 1` uninformative
//! observations of value 0 at uniform times and one signal observation
//! whose value is `+1` (class 1) or `-1` (class 0). The signal time is
//! recorded on the series.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::nn::Rng;
use crate::series::{Dataset, IrregularSeries, Observation};

pub const EARLY_MEAN: f64 = 0.25;
pub const LATE_MEAN: f64 = 0.75;
pub const SIGNAL_STD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalDistribution {
    Uniform,
    Early,
    Late,
    BiModal,
}

impl SignalDistribution {
    pub const ALL: [SignalDistribution; 4] = [Self::Uniform, Self::Early, Self::Late, Self::BiModal];

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Early => "early",
            Self::Late => "late",
            Self::BiModal => "bimodal",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    /// CDF of the clamped signal time.
    pub fn cdf(self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let n = |m: f64| math::normal_cdf((x - m) / SIGNAL_STD);
        match self {
            Self::Uniform => x,
            Self::Early => n(EARLY_MEAN),
            Self::Late => n(LATE_MEAN),
            Self::BiModal => 0.5 * (n(EARLY_MEAN) + n(LATE_MEAN)),
        }
    }

    fn sample(self, rng: &mut Rng, early_component: bool) -> f64 {
        let raw = match self {
            Self::Uniform => rng.uniform(),
            Self::Early => rng.normal(EARLY_MEAN, SIGNAL_STD),
            Self::Late => rng.normal(LATE_MEAN, SIGNAL_STD),
            Self::BiModal if early_component => rng.normal(EARLY_MEAN, SIGNAL_STD),
            Self::BiModal => rng.normal(LATE_MEAN, SIGNAL_STD),
        };
        raw.clamp(0.0, 1.0)
    }
}

impl core::fmt::Display for SignalDistribution {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Generates `n` series of `t_per_series` observations each. Exactly half
/// the series are class 1. For `BiModal`, exactly half of each class draws
/// its signal from the early component (rounded down for odd class sizes).
pub fn generate(kind: SignalDistribution, n: usize, t_per_series: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("n must be positive and even, got {n}")));
    }
    if t_per_series < 2 {
        return Err(Error::InvalidArgument(format!(
            "t_per_series must be at least 2, got {t_per_series}"
        )));
    }
    let mut rng = Rng::new(seed);
    let half = n / 2;
    let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i >= half)).collect();
    rng.shuffle(&mut labels);
    let mut seen = [0usize; 2];

    let mut series = Vec::with_capacity(n);
    for (i, &label) in labels.iter().enumerate() {
        let early_component = seen[label] < half / 2;
        seen[label] += 1;
        let mut times: Vec<f64> = (0..t_per_series - 1).map(|_| rng.uniform()).collect();
        times.sort_by(f64::total_cmp);
        let mut signal = kind.sample(&mut rng, early_component);
        let nudge = if signal < 0.5 { 1e-9 } else { -1e-9 };
        while times.iter().any(|&t| t == signal) {
            signal += nudge;
        }
        let value = if label == 1 { 1.0 } else { -1.0 };
        let mut obs: Vec<Observation> = times
            .into_iter()
            .map(|time| Observation {
                variable: 0,
                time,
                value: 0.0,
            })
            .collect();
        let at = obs.partition_point(|o| o.time < signal);
        obs.insert(
            at,
            Observation {
                variable: 0,
                time: signal,
                value,
            },
        );
        series.push(IrregularSeries::new(
            format!("{}-{i}", kind.name()),
            1,
            obs,
            label,
            1.0,
            Some(signal),
        )?);
    }
    Dataset::new(series, 1, 2)
}

/// Down-samples a dense, time-sorted stream: a sample is kept when the
/// Euclidean norm of its values differs from the norm of the last kept
/// sample by more than `threshold`. The first sample is always kept.
/// Samples whose time does not strictly increase are dropped.
pub fn listening_probe(
    id: impl Into<alloc::string::String>,
    dense: &[(f64, Vec<f64>)],
    threshold: f64,
    label: usize,
    horizon: f64,
) -> Result<IrregularSeries> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    let num_variables = dense.first().map_or(0, |(_, v)| v.len());
    let norm = |v: &[f64]| math::sqrt(v.iter().map(|x| x * x).sum());
    let mut kept: Vec<Observation> = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (time, values) in dense {
        if values.len() != num_variables {
            return Err(Error::DimensionMismatch {
                context: "listening probe sample",
                expected: num_variables,
                actual: values.len(),
            });
        }
        let keep = match last {
            None => true,
            Some((t_prev, n_prev)) => *time > t_prev && math::abs(norm(values) - n_prev) > threshold,
        };
        if keep {
            last = Some((*time, norm(values)));
            kept.extend(values.iter().enumerate().map(|(d, &value)| Observation {
                variable: d,
                time: *time,
                value,
            }));
        }
    }
    IrregularSeries::new(id, num_variables.max(1), kept, label, horizon, None)
}
