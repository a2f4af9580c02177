//! Metrics, halting baselines and earliness/accuracy trade-off curves.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::encoder::{encode_prefix, PrefixCursor};
use crate::error::{Error, Result};
use crate::math;
use crate::model::ModelBundle;
use crate::nn::Rng;
use crate::series::{Dataset, IrregularSeries};
use crate::training::{argmax, rollout, train, HopMode, RolloutConfig, TrainConfig};

/// Rank-based (Mann-Whitney) area under the ROC curve. Tied scores count
/// one half per positive/negative pair.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "auc labels",
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument("auc needs both classes present".into()));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// One-vs-rest AUC for two classes, macro-averaged one-vs-rest AUC over the
/// classes present otherwise.
pub fn auc_multiclass(probs: &[Vec<f64>], labels: &[usize], num_classes: usize) -> Result<f64> {
    if num_classes == 2 {
        let scores: Vec<f64> = probs.iter().map(|p| p[1]).collect();
        let bin: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        return auc(&scores, &bin);
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for c in 0..num_classes {
        let bin: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        if bin.iter().all(|&b| b) || !bin.iter().any(|&b| b) {
            continue;
        }
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        total += auc(&scores, &bin)?;
        used += 1;
    }
    if used == 0 {
        return Err(Error::InvalidArgument("auc needs at least two classes present".into()));
    }
    Ok(total / used as f64)
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `None` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / math::sqrt(sxx * syy))
}

/// Two-sample Kolmogorov-Smirnov statistic between empirical CDFs.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { 1.0 };
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max(math::abs(i as f64 / na - j as f64 / nb));
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub hop_mode: HopMode,
    pub seed: u64,
    pub max_hops: usize,
    pub min_hop_fraction: f64,
    pub snap_to_grid: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            hop_mode: HopMode::Sample,
            seed: 0,
            max_hops: 1000,
            min_hop_fraction: 1e-4,
            snap_to_grid: false,
        }
    }
}

impl EvalConfig {
    pub fn rollout_config(&self, sigma: f64) -> RolloutConfig {
        RolloutConfig {
            max_hops: self.max_hops,
            min_hop_fraction: self.min_hop_fraction,
            snap_to_grid: self.snap_to_grid,
            ..RolloutConfig::evaluation(sigma, self.hop_mode)
        }
    }
}

/// Outcome of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesOutcome {
    pub id: String,
    pub label: usize,
    pub halting_time: f64,
    pub halting_fraction: f64,
    pub probs: Vec<f64>,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `None` when the dataset holds a single class.
    pub auc: Option<f64>,
    pub mean_halting_fraction: f64,
    /// Sorted halting fractions, the support of the halting CDF.
    pub halting_cdf: Vec<f64>,
    pub kolmogorov_distance: Option<f64>,
    pub series: Vec<SeriesOutcome>,
}

impl EvalReport {
    /// Aggregates per-series outcomes, in dataset order.
    pub fn from_outcomes(outcomes: Vec<SeriesOutcome>, dataset: &Dataset) -> Result<Self> {
        if outcomes.len() != dataset.len() {
            return Err(Error::DimensionMismatch {
                context: "evaluation outcomes",
                expected: dataset.len(),
                actual: outcomes.len(),
            });
        }
        let n = outcomes.len().max(1) as f64;
        let accuracy = outcomes.iter().filter(|o| o.predicted == o.label).count() as f64 / n;
        let mean_halting_fraction = outcomes.iter().map(|o| o.halting_fraction).sum::<f64>() / n;
        let probs: Vec<Vec<f64>> = outcomes.iter().map(|o| o.probs.clone()).collect();
        let labels: Vec<usize> = outcomes.iter().map(|o| o.label).collect();
        let auc = auc_multiclass(&probs, &labels, dataset.num_classes).ok();
        let mut halting_cdf: Vec<f64> = outcomes.iter().map(|o| o.halting_fraction).collect();
        halting_cdf.sort_by(f64::total_cmp);
        let mut report = Self {
            accuracy,
            auc,
            mean_halting_fraction,
            halting_cdf,
            kolmogorov_distance: None,
            series: outcomes,
        };
        if dataset.series.iter().all(|s| s.signal_time.is_some()) && !dataset.is_empty() {
            report.kolmogorov_distance = Some(halting_cdf_distance(&report, dataset)?);
        }
        Ok(report)
    }
}

fn outcome(series: &IrregularSeries, halting_time: f64, probs: Vec<f64>) -> SeriesOutcome {
    SeriesOutcome {
        id: series.id.clone(),
        label: series.label,
        halting_time,
        halting_fraction: halting_time / series.horizon,
        predicted: argmax(&probs),
        probs,
    }
}

/// Evaluation-mode rollout of series `index`. Each series draws from its
/// own random stream so results do not depend on evaluation order.
pub fn evaluate_series(
    model: &ModelBundle,
    series: &IrregularSeries,
    index: usize,
    config: &EvalConfig,
) -> Result<SeriesOutcome> {
    let mut rng = Rng::stream(config.seed, index as u64);
    let trace = rollout(model, series, &config.rollout_config(model.config.sigma), &mut rng)?;
    Ok(outcome(series, trace.halting_time, trace.prediction))
}

/// One greedy (ε = 0) rollout per series.
pub fn evaluate(model: &ModelBundle, dataset: &Dataset, config: &EvalConfig) -> Result<EvalReport> {
    let outcomes = dataset
        .series
        .iter()
        .enumerate()
        .map(|(i, s)| evaluate_series(model, s, i, config))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_outcomes(outcomes, dataset)
}

/// Classifies `series` from its prefix at `fraction` of the horizon.
pub fn preset_series(model: &ModelBundle, series: &IrregularSeries, fraction: f64) -> Result<SeriesOutcome> {
    let t = fraction.clamp(0.0, 1.0) * series.horizon;
    let (h, _) = encode_prefix(series, t, &model.encoder)?;
    Ok(outcome(series, t, model.classifier.classify(&h)))
}

/// Stops every series at the same fraction of its horizon.
pub fn preset_report(model: &ModelBundle, dataset: &Dataset, fraction: f64) -> Result<EvalReport> {
    check_fraction(fraction)?;
    let outcomes = dataset
        .series
        .iter()
        .map(|s| preset_series(model, s, fraction))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_outcomes(outcomes, dataset)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if (0.0..=1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("fraction must lie in [0, 1], got {fraction}")))
    }
}

/// Classifies at each observation time and stops the first time the top
/// class probability exceeds `threshold`, or at the horizon.
pub fn egru_series(model: &ModelBundle, series: &IrregularSeries, threshold: f64) -> Result<SeriesOutcome> {
    let mut cursor = PrefixCursor::new(&model.encoder, series, false);
    while let Some(t) = cursor.absorb_next(&model.encoder)? {
        // Absorb simultaneous points, if any, before classifying.
        cursor.advance_to(&model.encoder, t)?;
        let h = model.encoder.decay_only(cursor.state(), t);
        let probs = model.classifier.classify(&h);
        if probs.iter().any(|&p| p > threshold) {
            return Ok(outcome(series, t, probs));
        }
    }
    let h = model.encoder.decay_only(cursor.state(), series.horizon);
    Ok(outcome(series, series.horizon, model.classifier.classify(&h)))
}

pub fn egru_report(model: &ModelBundle, dataset: &Dataset, threshold: f64) -> Result<EvalReport> {
    if !(threshold > 0.5 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0.5, 1), got {threshold}")));
    }
    let outcomes = dataset
        .series
        .iter()
        .map(|s| egru_series(model, s, threshold))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_outcomes(outcomes, dataset)
}

/// Kolmogorov distance between the halting-fraction CDF of `report` and the
/// CDF of true signal-time fractions in `dataset`.
pub fn halting_cdf_distance(report: &EvalReport, dataset: &Dataset) -> Result<f64> {
    let truth = dataset
        .series
        .iter()
        .map(|s| {
            s.signal_time.map(|t| t / s.horizon).ok_or_else(|| Error::InvalidSeries {
                id: s.id.clone(),
                reason: "missing signal_time".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tau: Vec<f64> = report.series.iter().map(|o| o.halting_fraction).collect();
    Ok(ks_distance(&tau, &truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sweep_value: f64,
    pub mean_halting_fraction: f64,
    pub accuracy: f64,
    pub accuracy_std: f64,
    pub auc: f64,
    pub auc_std: f64,
}

impl CurvePoint {
    /// Mean and sample standard deviation over repeated runs (one report
    /// per seed). Missing AUCs propagate as NaN.
    pub fn aggregate(sweep_value: f64, reports: &[EvalReport]) -> Self {
        let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
        let auc: Vec<f64> = reports.iter().map(|r| r.auc.unwrap_or(f64::NAN)).collect();
        let frac: Vec<f64> = reports.iter().map(|r| r.mean_halting_fraction).collect();
        let (accuracy, accuracy_std) = mean_std(&acc);
        let (auc, auc_std) = mean_std(&auc);
        Self {
            sweep_value,
            mean_halting_fraction: mean_std(&frac).0,
            accuracy,
            accuracy_std,
            auc,
            auc_std,
        }
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub points: Vec<CurvePoint>,
}

impl TradeoffCurve {
    pub const CSV_HEADER: &'static str = "sweep_value,mean_halting_fraction,accuracy,accuracy_std,auc,auc_std";

    /// Sorts points by mean halting fraction.
    pub fn new(mut points: Vec<CurvePoint>) -> Self {
        points.sort_by(|a, b| a.mean_halting_fraction.total_cmp(&b.mean_halting_fraction));
        Self { points }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.sweep_value, p.mean_halting_fraction, p.accuracy, p.accuracy_std, p.auc, p.auc_std
            ));
        }
        out
    }
}

pub fn baseline_preset(model: &ModelBundle, fractions: &[f64], dataset: &Dataset) -> Result<TradeoffCurve> {
    let points = fractions
        .iter()
        .map(|&f| preset_report(model, dataset, f).map(|r| CurvePoint::aggregate(f, &[r])))
        .collect::<Result<Vec<_>>>()?;
    Ok(TradeoffCurve::new(points))
}

pub fn baseline_egru(model: &ModelBundle, thresholds: &[f64], dataset: &Dataset) -> Result<TradeoffCurve> {
    let points = thresholds
        .iter()
        .map(|&a| egru_report(model, dataset, a).map(|r| CurvePoint::aggregate(a, &[r])))
        .collect::<Result<Vec<_>>>()?;
    Ok(TradeoffCurve::new(points))
}

/// Trains one model per `(λ, seed)` pair on `train_data`, evaluates on
/// `test`, and averages over seeds.
pub fn sweep_lambda(
    train_data: &Dataset,
    val: &Dataset,
    test: &Dataset,
    lambdas: &[f64],
    seeds: &[u64],
    config: &TrainConfig,
) -> Result<TradeoffCurve> {
    if lambdas.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one λ and one seed".into()));
    }
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let reports = seeds
            .iter()
            .map(|&seed| {
                let cfg = TrainConfig { lambda, seed, ..*config };
                let outcome = train(train_data, val, &cfg)?;
                evaluate(&outcome.model, test, &cfg.eval_config())
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(CurvePoint::aggregate(lambda, &reports));
    }
    Ok(TradeoffCurve::new(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::synthetic::{generate, SignalDistribution};
    use alloc::vec;

    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    den += 1.0;
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / den
    }

    #[test]
    fn auc_small_cases() {
        assert_eq!(auc(&[0.9, 0.8, 0.3], &[true, false, true]).unwrap(), 0.5);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
        assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn auc_null_case_is_near_half() {
        let mut rng = Rng::new(77);
        let scores: Vec<f64> = (0..4000).map(|_| rng.uniform()).collect();
        let labels: Vec<bool> = (0..4000).map(|_| rng.bernoulli(0.5)).collect();
        assert!((auc(&scores, &labels).unwrap() - 0.5).abs() < 0.03);
    }

    #[test]
    fn ks_distance_cases() {
        assert_eq!(ks_distance(&[0.1, 0.2, 0.3], &[0.3, 0.1, 0.2]), 0.0);
        assert_eq!(ks_distance(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
        assert!((ks_distance(&[0.5; 4], &[0.2, 0.4, 0.6, 0.8]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spearman_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), None);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    fn small_model(seed: u64) -> ModelBundle {
        ModelBundle::new(
            ModelConfig {
                input_size: 1,
                num_classes: 2,
                hidden_size: 4,
                classifier_hidden: 4,
                sigma: 0.1,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn preset_at_full_horizon_matches_full_series_encoding() {
        let ds = generate(SignalDistribution::Uniform, 20, 6, 1).unwrap();
        let model = small_model(2);
        let report = preset_report(&model, &ds, 1.0).unwrap();
        for (s, o) in ds.series.iter().zip(&report.series) {
            let (h, _) = encode_prefix(s, s.horizon, &model.encoder).unwrap();
            assert_eq!(o.probs, model.classifier.classify(&h));
        }
    }

    #[test]
    fn preset_halting_cdf_is_a_step() {
        let ds = generate(SignalDistribution::BiModal, 400, 10, 3).unwrap();
        let report = preset_report(&small_model(0), &ds, 0.5).unwrap();
        assert!(report.halting_cdf.iter().all(|&x| x == 0.5));
        let truth: Vec<f64> = ds.series.iter().map(|s| s.signal_time.unwrap()).collect();
        let below = truth.iter().filter(|&&t| t <= 0.5).count() as f64 / truth.len() as f64;
        let expected = below.max(1.0 - below);
        assert!((report.kolmogorov_distance.unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.5).abs() < 0.05);
    }

    #[test]
    fn stop_immediately_policy_halts_at_zero() {
        let ds = generate(SignalDistribution::Early, 40, 5, 8).unwrap();
        let mut model = small_model(4);
        model.stop.b.value.data[0] = 50.0;
        let report = evaluate(&model, &ds, &EvalConfig::default()).unwrap();
        assert_eq!(report.mean_halting_fraction, 0.0);
    }

    #[test]
    fn next_observation_mode_halts_at_observation_times() {
        let ds = generate(SignalDistribution::Uniform, 40, 8, 9).unwrap();
        let mut model = small_model(5);
        model.stop.b.value.data[0] = -1.0;
        let cfg = EvalConfig {
            hop_mode: HopMode::NextObservation,
            ..Default::default()
        };
        let report = evaluate(&model, &ds, &cfg).unwrap();
        for (s, o) in ds.series.iter().zip(&report.series) {
            let on_grid = s.observations().any(|ob| ob.time == o.halting_time);
            assert!(on_grid || o.halting_time == s.horizon, "{}", o.halting_time);
        }
    }

    #[test]
    fn deterministic_evaluation_is_reproducible() {
        let ds = generate(SignalDistribution::Uniform, 30, 6, 10).unwrap();
        let model = small_model(6);
        for hop_mode in [HopMode::Mean, HopMode::Sample] {
            let cfg = EvalConfig {
                hop_mode,
                seed: 3,
                ..Default::default()
            };
            assert_eq!(evaluate(&model, &ds, &cfg).unwrap(), evaluate(&model, &ds, &cfg).unwrap());
        }
    }

    #[test]
    fn egru_halting_is_monotone_in_threshold() {
        let ds = generate(SignalDistribution::Uniform, 60, 8, 12).unwrap();
        let model = small_model(7);
        let thresholds = [0.501, 0.51, 0.52, 0.55, 0.6, 0.8, 0.999];
        for s in &ds.series {
            let taus: Vec<f64> = thresholds
                .iter()
                .map(|&a| egru_series(&model, s, a).unwrap().halting_time)
                .collect();
            assert!(taus.windows(2).all(|w| w[0] <= w[1]), "{taus:?}");
        }
        assert!(egru_report(&model, &ds, 0.5).is_err());
    }

    #[test]
    fn curve_is_sorted_and_serialised() {
        let ds = generate(SignalDistribution::Uniform, 20, 4, 13).unwrap();
        let curve = baseline_preset(&small_model(8), &[1.0, 0.0, 0.5], &ds).unwrap();
        let fr: Vec<f64> = curve.points.iter().map(|p| p.mean_halting_fraction).collect();
        assert_eq!(fr, vec![0.0, 0.5, 1.0]);
        let csv = curve.to_csv();
        assert!(csv.starts_with(TradeoffCurve::CSV_HEADER));
        assert_eq!(csv.lines().count(), 4);
    }

    proptest::proptest! {
        #[test]
        fn auc_matches_pairwise_enumeration(
            scores in proptest::collection::vec(0u8..6, 2..30),
            flips in proptest::collection::vec(proptest::bool::ANY, 2..30),
        ) {
            let n = scores.len().min(flips.len());
            let s: Vec<f64> = scores[..n].iter().map(|&v| v as f64).collect();
            let l = &flips[..n];
            proptest::prop_assume!(l.iter().any(|&b| b) && l.iter().any(|&b| !b));
            let a = auc(&s, l).unwrap();
            proptest::prop_assert!((a - pairwise_auc(&s, l)).abs() < 1e-12);
            proptest::prop_assert!((0.0..=1.0).contains(&a));
            let t: Vec<f64> = s.iter().map(|v| math::exp(*v) * 3.0 + 1.0).collect();
            proptest::prop_assert_eq!(auc(&t, l).unwrap(), a);
        }

        #[test]
        fn ks_distance_is_bounded(
            a in proptest::collection::vec(0.0f64..1.0, 1..40),
            b in proptest::collection::vec(0.0f64..1.0, 1..40),
        ) {
            let d = ks_distance(&a, &b);
            proptest::prop_assert!((0.0..=1.0).contains(&d));
            proptest::prop_assert_eq!(ks_distance(&a, &a), 0.0);
        }
    }
}
