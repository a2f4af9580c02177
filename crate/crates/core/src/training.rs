//! Episode rollout, REINFORCE loss assembly and joint training.
//!
//! An episode walks the continuous timeline of one series: at each
//! candidate time `t'` the encoder is brought up to `t'`, the classifier and
//! the stop policy are evaluated, and on Wait the hop policy proposes the
//! next candidate. The reward is terminal, `+1` for a correct final
//! prediction and `-1` otherwise, and is broadcast as the return of every
//! step.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierCache;
use crate::encoder::{DecayCache, PrefixCursor, StepCache};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig};
use crate::model::{ModelBundle, ModelConfig};
use crate::nn::{cross_entropy, cross_entropy_logits_grad, AdamConfig, AdamState, Parameterized, Rng};
use crate::policy::{
    action_log_prob, hop_from_raw, sample_hop, select_stop_action, Action, EpsilonSchedule, HopCache,
    HopSample, StopCache,
};
use crate::series::{Dataset, IrregularSeries};

/// How Wait actions choose the next candidate time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopMode {
    /// Sample `|g|`, `g ~ N(μ, σ)`.
    Sample,
    /// Hop by exactly μ.
    Mean,
    /// Ignore the hop policy and advance to the next observation.
    NextObservation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Draw from the stop policy (with ε-greedy exploration).
    Sample,
    /// Stop iff `p_stop >= 0.5`.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub epsilon: f64,
    pub wait_bias: f64,
    /// Hop standard deviation as a fraction of the horizon.
    pub sigma: f64,
    pub max_hops: usize,
    /// Smallest hop, as a fraction of the horizon.
    pub min_hop_fraction: f64,
    pub hop_mode: HopMode,
    pub stop_rule: StopRule,
    /// Round each new candidate time to the nearest later observation time
    /// (or the horizon).
    pub snap_to_grid: bool,
}

impl RolloutConfig {
    pub fn training(config: &TrainConfig, epsilon: f64) -> Self {
        Self {
            epsilon,
            wait_bias: config.wait_bias,
            sigma: config.sigma,
            max_hops: config.max_hops,
            min_hop_fraction: config.min_hop_fraction,
            hop_mode: config.train_hop_mode,
            stop_rule: StopRule::Sample,
            snap_to_grid: config.snap_to_grid,
        }
    }

    /// ε = 0 with greedy stopping.
    pub fn evaluation(sigma: f64, hop_mode: HopMode) -> Self {
        Self {
            epsilon: 0.0,
            wait_bias: 0.0,
            sigma,
            max_hops: 1000,
            min_hop_fraction: 1e-4,
            hop_mode,
            stop_rule: StopRule::Greedy,
            snap_to_grid: false,
        }
    }
}

/// One candidate halting time within an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: f64,
    pub hidden: Vec<f64>,
    /// Intermediate class probabilities ŷ at this time.
    pub probs: Vec<f64>,
    /// `[p_stop, p_wait]`.
    pub stop_probs: [f64; 2],
    /// `None` when the episode was force-stopped (horizon or hop cap).
    pub action: Option<Action>,
    pub log_prob_stop: f64,
    /// Present on Wait steps whose hop was sampled from the hop policy.
    pub hop: Option<HopSample>,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub steps: Vec<StepRecord>,
    pub label: usize,
    pub horizon: f64,
    /// Class probabilities at the halting time.
    pub prediction: Vec<f64>,
    pub halting_time: f64,
    pub reward: f64,
    /// Hop standard deviation (fraction of horizon) the hops were drawn with.
    pub sigma: f64,
}

impl EpisodeTrace {
    pub fn predicted_class(&self) -> usize {
        argmax(&self.prediction)
    }

    pub fn correct(&self) -> bool {
        self.predicted_class() == self.label
    }

    pub fn halting_fraction(&self) -> f64 {
        self.halting_time / self.horizon
    }

    fn decision_steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.steps.iter().filter(|s| s.action.is_some())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

struct CandidateCache {
    steps_absorbed: usize,
    decay: DecayCache,
    classifier: ClassifierCache,
    stop: StopCache,
    hop: Option<HopCache>,
}

/// Forward caches of one episode, consumed by [`backward_episode`].
pub struct EpisodeTape {
    steps: Vec<StepCache>,
    candidates: Vec<CandidateCache>,
}

/// Runs one episode without recording a tape.
pub fn rollout(model: &ModelBundle, series: &IrregularSeries, config: &RolloutConfig, rng: &mut Rng) -> Result<EpisodeTrace> {
    rollout_inner(model, series, config, rng, false).map(|(t, _)| t)
}

/// Runs one episode and records everything needed to backpropagate.
pub fn rollout_with_tape(
    model: &ModelBundle,
    series: &IrregularSeries,
    config: &RolloutConfig,
    rng: &mut Rng,
) -> Result<(EpisodeTrace, EpisodeTape)> {
    rollout_inner(model, series, config, rng, true)
}

fn rollout_inner(
    model: &ModelBundle,
    series: &IrregularSeries,
    config: &RolloutConfig,
    rng: &mut Rng,
    record: bool,
) -> Result<(EpisodeTrace, EpisodeTape)> {
    let horizon = series.horizon;
    let min_hop = config.min_hop_fraction * horizon;
    let mut cursor = PrefixCursor::new(&model.encoder, series, record);
    let mut steps = Vec::new();
    let mut candidates = Vec::new();

    let mut t = 0.0;
    if config.hop_mode == HopMode::NextObservation {
        t = cursor.next_time().unwrap_or(horizon);
    }
    let mut hops = 0usize;
    loop {
        let forced = t >= horizon || hops >= config.max_hops;
        let t_eval = t.min(horizon);
        cursor.advance_to(&model.encoder, t_eval)?;
        let (h, decay) = model.encoder.decay_cached(cursor.state(), t_eval);
        let cls = model.classifier.forward(&h);
        let frac = t_eval / horizon;
        let stop = model.stop.forward(&h, &cls.probs, frac);
        let p = stop.probs;
        let baseline = model.baseline.value(&h);

        let action = if forced {
            None
        } else {
            Some(match config.stop_rule {
                StopRule::Sample => select_stop_action(&p, config.epsilon, config.wait_bias, rng).0,
                StopRule::Greedy if p[0] >= 0.5 => Action::Stop,
                StopRule::Greedy => Action::Wait,
            })
        };
        let log_prob_stop = action.map_or(0.0, |a| action_log_prob(&p, a));

        let mut hop_sample = None;
        let mut hop_cache = None;
        let mut next_t = t;
        if action == Some(Action::Wait) {
            let delta = match config.hop_mode {
                HopMode::NextObservation => cursor.next_time().unwrap_or(horizon) - t,
                HopMode::Sample | HopMode::Mean => {
                    let hc = model.hop.forward(&h, &cls.probs, frac);
                    let s = if config.hop_mode == HopMode::Sample {
                        sample_hop(hc.mu, config.sigma, rng)
                    } else {
                        hop_from_raw(hc.mu, config.sigma, hc.mu)
                    };
                    hop_cache = Some(hc);
                    hop_sample = Some(s);
                    s.delta * horizon
                }
            };
            next_t = t + delta.max(min_hop);
            if config.snap_to_grid && config.hop_mode != HopMode::NextObservation {
                next_t = snap_forward(cursor.grid(), t, next_t, horizon);
            }
        }

        steps.push(StepRecord {
            time: t_eval,
            hidden: h,
            probs: cls.probs.clone(),
            stop_probs: p,
            action,
            log_prob_stop,
            hop: hop_sample,
            baseline,
        });
        if record {
            candidates.push(CandidateCache {
                steps_absorbed: cursor.steps_taken(),
                decay,
                classifier: cls,
                stop,
                hop: hop_cache,
            });
        }
        if action != Some(Action::Wait) {
            break;
        }
        t = next_t;
        hops += 1;
    }

    let last = steps.last().expect("episode has at least one step");
    let prediction = last.probs.clone();
    let halting_time = last.time;
    let label = series.label;
    let reward = if argmax(&prediction) == label { 1.0 } else { -1.0 };
    let trace = EpisodeTrace {
        steps,
        label,
        horizon,
        prediction,
        halting_time,
        reward,
        sigma: config.sigma,
    };
    let tape = EpisodeTape {
        steps: cursor.into_tape(),
        candidates,
    };
    Ok((trace, tape))
}

/// Nearest of the grid times after `t` (and the horizon) to `proposal`.
fn snap_forward(grid: &[crate::series::GridPoint], t: f64, proposal: f64, horizon: f64) -> f64 {
    let mut best = horizon;
    for g in grid.iter().filter(|g| g.time > t) {
        if (g.time - proposal).abs() < (best - proposal).abs() {
            best = g.time;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Losses {
    pub accuracy: f64,
    pub early: f64,
    pub total: f64,
    pub baseline: f64,
}

/// Batch losses:
///
/// - `accuracy`: cross-entropy averaged over each trace's visited steps,
///   then over traces;
/// - `early`: `-Σ log π_stop(a)·G - Σ log π_hop(Δ)·G - λ Σ log π_stop(Stop)`
///   per trace with `G = r - b`, averaged over traces;
/// - `total = accuracy + α · early`;
/// - `baseline`: mean squared error of `b` against `r`.
pub fn compute_losses(traces: &[EpisodeTrace], lambda: f64, alpha: f64) -> Losses {
    let n = traces.len().max(1) as f64;
    let mut out = Losses::default();
    let mut baseline_traces = 0usize;
    for tr in traces {
        let k = tr.steps.len().max(1) as f64;
        out.accuracy += tr.steps.iter().map(|s| cross_entropy(&s.probs, tr.label)).sum::<f64>() / k;
        let mut early = 0.0;
        let mut bl = 0.0;
        let mut n_dec = 0usize;
        for s in tr.decision_steps() {
            let g = tr.reward - s.baseline;
            early -= s.log_prob_stop * g;
            if let Some(hop) = &s.hop {
                early -= hop.log_density * g;
            }
            early -= lambda * action_log_prob(&s.stop_probs, Action::Stop);
            bl += (s.baseline - tr.reward) * (s.baseline - tr.reward);
            n_dec += 1;
        }
        out.early += early;
        if n_dec > 0 {
            out.baseline += bl / n_dec as f64;
            baseline_traces += 1;
        }
    }
    out.accuracy /= n;
    out.early /= n;
    out.total = out.accuracy + alpha * out.early;
    if baseline_traces > 0 {
        out.baseline /= baseline_traces as f64;
    }
    out
}

/// Gradient of the batch loss with respect to the per-step outputs of each
/// component.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSeeds {
    pub class_logits: Vec<f64>,
    pub stop_logits: [f64; 2],
    pub hop_mu: f64,
    pub baseline: f64,
}

/// Seeds for one trace of a batch of `batch_size` traces.
pub fn episode_seeds(trace: &EpisodeTrace, lambda: f64, alpha: f64, batch_size: usize) -> Vec<StepSeeds> {
    let inv_b = 1.0 / batch_size.max(1) as f64;
    let inv_k = 1.0 / trace.steps.len().max(1) as f64;
    let n_dec = trace.decision_steps().count().max(1) as f64;
    let sigma2 = trace.sigma * trace.sigma;
    trace
        .steps
        .iter()
        .map(|s| {
            let mut class_logits = cross_entropy_logits_grad(&s.probs, trace.label);
            class_logits.iter_mut().for_each(|v| *v *= inv_b * inv_k);
            let mut seeds = StepSeeds {
                class_logits,
                stop_logits: [0.0; 2],
                hop_mu: 0.0,
                baseline: 0.0,
            };
            if let Some(action) = s.action {
                let g = trace.reward - s.baseline;
                let p = s.stop_probs;
                let w = alpha * inv_b;
                for i in 0..2 {
                    let taken = if i == action.index() { 1.0 } else { 0.0 };
                    let stop = if i == Action::Stop.index() { 1.0 } else { 0.0 };
                    // d(-log π(a)) / dz = p - onehot(a); same for the λ term with a = Stop.
                    seeds.stop_logits[i] = w * (g * (p[i] - taken) + lambda * (p[i] - stop));
                }
                if let Some(hop) = &s.hop {
                    seeds.hop_mu = -w * g * (hop.raw - hop.mu) / sigma2;
                }
                seeds.baseline = inv_b * 2.0 * (s.baseline - trace.reward) / n_dec;
            }
            seeds
        })
        .collect()
}

/// Accumulates the gradients of one episode into `model`. With
/// `detach_policy_inputs`, policy gradients stop at the policy heads
/// instead of flowing into the classifier and encoder.
pub fn backward_episode(
    model: &mut ModelBundle,
    trace: &EpisodeTrace,
    tape: &EpisodeTape,
    seeds: &[StepSeeds],
    detach_policy_inputs: bool,
) {
    debug_assert_eq!(tape.candidates.len(), seeds.len());
    let mut reads: Vec<Vec<f64>> = Vec::with_capacity(seeds.len());
    for ((c, seed), rec) in tape.candidates.iter().zip(seeds).zip(&trace.steps) {
        let hsize = rec.hidden.len();
        let mut dh = vec![0.0; hsize];
        let mut dy = vec![0.0; rec.probs.len()];
        if rec.action.is_some() {
            let (sh, sy) = model.stop.backward(&c.stop, &seed.stop_logits);
            let mut add = |h: Vec<f64>, y: Vec<f64>| {
                if !detach_policy_inputs {
                    dh.iter_mut().zip(h).for_each(|(a, b)| *a += b);
                    dy.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                }
            };
            add(sh, sy);
            if let Some(hc) = &c.hop {
                let (hh, hy) = model.hop.backward(hc, seed.hop_mu);
                add(hh, hy);
            }
            model.baseline.backward(&rec.hidden, seed.baseline);
        }
        let dy_opt = (!detach_policy_inputs).then_some(dy.as_slice());
        let dc = model.classifier.backward(&c.classifier, &seed.class_logits, dy_opt);
        dh.iter_mut().zip(dc).for_each(|(a, b)| *a += b);
        reads.push(dh);
    }
    let queries: Vec<(usize, &DecayCache, &[f64])> = tape
        .candidates
        .iter()
        .zip(&reads)
        .map(|(c, dh)| (c.steps_absorbed, &c.decay, dh.as_slice()))
        .collect();
    model.encoder.backward_tape(&tape.steps, &queries);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Earliness weight.
    pub lambda: f64,
    /// Weight of the earliness loss against the accuracy loss.
    pub alpha: f64,
    /// Hop standard deviation as a fraction of the horizon.
    pub sigma: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub max_hops: usize,
    pub min_hop_fraction: f64,
    pub hidden_size: usize,
    /// Width of the classifier's hidden layer; `None` uses `hidden_size`.
    pub classifier_hidden: Option<usize>,
    pub seed: u64,
    pub wait_bias: f64,
    pub snap_to_grid: bool,
    /// Evaluate with `Δt = μ` instead of sampling.
    pub deterministic_eval_hop: bool,
    pub detach_policy_inputs: bool,
    pub train_hop_mode: HopMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            alpha: 1.0,
            sigma: 0.1,
            learning_rate: 1e-3,
            weight_decay: 1e-5,
            epochs: 50,
            batch_size: 32,
            max_hops: 1000,
            min_hop_fraction: 1e-4,
            hidden_size: 10,
            classifier_hidden: None,
            seed: 0,
            wait_bias: 0.9,
            snap_to_grid: false,
            deterministic_eval_hop: false,
            detach_policy_inputs: false,
            train_hop_mode: HopMode::Sample,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("sigma", self.sigma),
            ("learning_rate", self.learning_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("lambda", self.lambda),
            ("weight_decay", self.weight_decay),
            ("min_hop_fraction", self.min_hop_fraction),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs, batch_size and hidden_size must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.wait_bias) {
            return Err(Error::InvalidArgument("wait_bias must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, input_size: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            input_size,
            num_classes,
            hidden_size: self.hidden_size,
            classifier_hidden: self.classifier_hidden.unwrap_or(self.hidden_size),
            sigma: self.sigma,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            hop_mode: if self.deterministic_eval_hop {
                HopMode::Mean
            } else {
                HopMode::Sample
            },
            seed: self.seed ^ 0x5eed_e7a1,
            max_hops: self.max_hops,
            min_hop_fraction: self.min_hop_fraction,
            snap_to_grid: self.snap_to_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub epsilon: f64,
    pub l_acc: f64,
    pub l_early: f64,
    pub loss: f64,
    pub baseline_loss: f64,
    pub train_accuracy: f64,
    pub train_halting_fraction: f64,
    pub val_accuracy: f64,
    pub val_auc: Option<f64>,
    pub mean_halting_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelBundle,
    pub log: Vec<EpochMetrics>,
}

const SHUFFLE_STREAM: u64 = u64::MAX;

fn episode_stream(epoch: usize, index: usize) -> u64 {
    ((epoch as u64) << 32) | index as u64
}

/// Trains a fresh model for `config`; see [`train_model`].
pub fn train(train_data: &Dataset, val_data: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let model = ModelBundle::new(
        config.model_config(train_data.num_variables, train_data.num_classes),
        config.seed,
    )?;
    train_model(model, train_data, val_data, config, |_| {})
}

/// Joint training of every component. Each epoch shuffles the training
/// set, rolls out mini-batches with the scheduled ε, and takes one Adam step
/// per batch; validation metrics are computed with ε = 0 at the end of each
/// epoch and passed to `on_epoch`.
pub fn train_model(
    mut model: ModelBundle,
    train_data: &Dataset,
    val_data: &Dataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_data.is_empty() {
        return Err(Error::InvalidDataset("empty training set".into()));
    }
    if model.config.input_size != train_data.num_variables || model.config.num_classes != train_data.num_classes {
        return Err(Error::InvalidArgument("model shape does not match the training data".into()));
    }
    model.config.sigma = config.sigma;
    if model.normalization.is_none() {
        model.normalization = train_data.normalization.clone();
    }
    let schedule = EpsilonSchedule {
        total_epochs: config.epochs,
        wait_bias: config.wait_bias,
    };
    let mut opt = AdamState::new(&model, AdamConfig::new(config.learning_rate, config.weight_decay));
    model.zero_grad();
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let epsilon = schedule.epsilon_at(epoch);
        let rollout_cfg = RolloutConfig::training(config, epsilon);
        Rng::stream(config.seed, SHUFFLE_STREAM - epoch as u64).shuffle(&mut order);

        let mut sums = Losses::default();
        let mut batches = 0usize;
        let mut correct = 0usize;
        let mut halting = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut traces = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let mut rng = Rng::stream(config.seed, episode_stream(epoch, i));
                let (trace, tape) = rollout_with_tape(&model, &train_data.series[i], &rollout_cfg, &mut rng)?;
                let seeds = episode_seeds(&trace, config.lambda, config.alpha, chunk.len());
                backward_episode(&mut model, &trace, &tape, &seeds, config.detach_policy_inputs);
                correct += trace.correct() as usize;
                halting += trace.halting_fraction();
                traces.push(trace);
            }
            let losses = compute_losses(&traces, config.lambda, config.alpha);
            if !losses.total.is_finite() || !losses.baseline.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    what: "loss",
                });
            }
            opt.step(&mut model);
            if !model.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    what: "parameters",
                });
            }
            sums.accuracy += losses.accuracy;
            sums.early += losses.early;
            sums.total += losses.total;
            sums.baseline += losses.baseline;
            batches += 1;
        }

        let nb = batches.max(1) as f64;
        let n = train_data.len() as f64;
        let (val_accuracy, val_auc, mean_halting_fraction) = if val_data.is_empty() {
            (f64::NAN, None, f64::NAN)
        } else {
            let report = evaluate(&model, val_data, &config.eval_config())?;
            (report.accuracy, report.auc, report.mean_halting_fraction)
        };
        let metrics = EpochMetrics {
            epoch,
            epsilon,
            l_acc: sums.accuracy / nb,
            l_early: sums.early / nb,
            loss: sums.total / nb,
            baseline_loss: sums.baseline / nb,
            train_accuracy: correct as f64 / n,
            train_halting_fraction: halting / n,
            val_accuracy,
            val_auc,
            mean_halting_fraction,
        };
        on_epoch(&metrics);
        log.push(metrics);
    }
    Ok(TrainOutcome { model, log })
}

/// Result of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub val_accuracy: f64,
    pub mean_halting_fraction: f64,
}

/// Trains one model per `(learning rate, weight decay)` pair and returns the
/// configuration with the best final validation accuracy, ties broken by
/// the smaller mean halting fraction, together with every cell's result.
pub fn grid_search(
    train_data: &Dataset,
    val_data: &Dataset,
    learning_rates: &[f64],
    weight_decays: &[f64],
    config: &TrainConfig,
) -> Result<(TrainConfig, Vec<GridCell>)> {
    let cells: Vec<(f64, f64)> = learning_rates
        .iter()
        .flat_map(|&lr| weight_decays.iter().map(move |&wd| (lr, wd)))
        .collect();
    let results = cells
        .iter()
        .map(|&(lr, wd)| {
            let cfg = TrainConfig {
                learning_rate: lr,
                weight_decay: wd,
                ..*config
            };
            train(train_data, val_data, &cfg).map(|o| o.log)
        })
        .collect::<Result<Vec<_>>>()?;
    select_grid_cell(config, &cells, &results)
}

/// Picks the winning cell from per-cell training logs.
pub fn select_grid_cell(
    config: &TrainConfig,
    cells: &[(f64, f64)],
    logs: &[Vec<EpochMetrics>],
) -> Result<(TrainConfig, Vec<GridCell>)> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    let summary: Vec<GridCell> = cells
        .iter()
        .zip(logs)
        .map(|(&(lr, wd), log)| {
            let last = log.last();
            GridCell {
                learning_rate: lr,
                weight_decay: wd,
                val_accuracy: last.map_or(f64::NAN, |m| m.val_accuracy),
                mean_halting_fraction: last.map_or(f64::NAN, |m| m.mean_halting_fraction),
            }
        })
        .collect();
    let mut best = 0;
    for (i, c) in summary.iter().enumerate().skip(1) {
        let b = &summary[best];
        let better = c.val_accuracy > b.val_accuracy
            || (c.val_accuracy == b.val_accuracy && c.mean_halting_fraction < b.mean_halting_fraction);
        if better {
            best = i;
        }
    }
    let chosen = TrainConfig {
        learning_rate: summary[best].learning_rate,
        weight_decay: summary[best].weight_decay,
        ..*config
    };
    Ok((chosen, summary))
}
