#![allow(dead_code)]

use earlyclass_core::eval::{evaluate, EvalReport};
use earlyclass_core::nn::{ParamMatrix, Parameterized, Rng};
use earlyclass_core::policy::{select_stop_action, sample_hop, Action, HopPolicyParams, StopPolicyParams};
use earlyclass_core::series::split_random;
use earlyclass_core::training::{episode_seeds, train, EpisodeTrace, StepRecord, TrainConfig};
use earlyclass_core::{Dataset, ModelBundle};

/// Train, validation and test parts: 72%, 8% and 20%.
pub fn three_way_split(ds: &Dataset, seed: u64) -> (Dataset, Dataset, Dataset) {
    let (rest, test) = split_random(ds, 0.8, seed).unwrap();
    let (train, val) = split_random(&rest, 0.9, seed).unwrap();
    (train, val, test)
}

/// Trains on a three-way split of `ds` and evaluates on its test part.
pub fn train_and_test(ds: &Dataset, cfg: &TrainConfig) -> (ModelBundle, Dataset, EvalReport) {
    let (tr, va, te) = three_way_split(ds, cfg.seed);
    let model = train(&tr, &va, cfg).unwrap().model;
    let report = evaluate(&model, &te, &cfg.eval_config()).unwrap();
    (model, te, report)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / core::f64::consts::SQRT_2))
}

/// A one-decision bandit over the stop and hop heads at a fixed input:
/// Stop pays `STOP_REWARD`; Wait draws `g ~ N(μ, σ)` and pays
/// `-(|g| - TARGET)²`.
pub struct HopBandit {
    pub stop: StopPolicyParams,
    pub hop: HopPolicyParams,
    pub h: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub sigma: f64,
}

pub const STOP_REWARD: f64 = -0.05;
pub const TARGET: f64 = 0.3;

impl Parameterized for HopBandit {
    fn params(&self) -> Vec<&ParamMatrix> {
        let mut v = self.stop.params();
        v.extend(self.hop.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut ParamMatrix> {
        let mut v = self.stop.params_mut();
        v.extend(self.hop.params_mut());
        v
    }
}

impl HopBandit {
    pub fn new(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let mut stop = StopPolicyParams::new(3, 2, &mut rng);
        stop.b.value.data = vec![rng.uniform_range(-0.5, 0.5), rng.uniform_range(-0.5, 0.5)];
        let mut hop = HopPolicyParams::new(3, 2, &mut rng);
        hop.b.value.data = vec![0.4];
        let bandit = Self {
            stop,
            hop,
            h: vec![0.5, -0.3, 0.8],
            y: vec![0.6, 0.4],
            t: 0.2,
            sigma: 0.2,
        };
        assert!(bandit.hop.mean(&bandit.h, &bandit.y, bandit.t) > 0.1);
        bandit
    }

    /// Closed-form expected reward.
    pub fn expected_reward(&self) -> f64 {
        let p = self.stop.stop_probability(&self.h, &self.y, self.t);
        let mu = self.hop.mean(&self.h, &self.y, self.t);
        let s = self.sigma;
        // Folded normal moments.
        let e_abs = s * (2.0 / core::f64::consts::PI).sqrt() * (-mu * mu / (2.0 * s * s)).exp()
            + mu * (1.0 - 2.0 * normal_cdf(-mu / s));
        let e_sq = mu * mu + s * s;
        let wait = -(e_sq - 2.0 * TARGET * e_abs + TARGET * TARGET);
        p[0] * STOP_REWARD + p[1] * wait
    }

    /// Accumulates the score-function estimate of `-∇J` over `episodes`
    /// sampled episodes into the parameter gradients.
    pub fn accumulate_policy_gradient(&mut self, episodes: usize, rng: &mut Rng) {
        self.zero_grad();
        for _ in 0..episodes {
            let sc = self.stop.forward(&self.h, &self.y, self.t);
            let hc = self.hop.forward(&self.h, &self.y, self.t);
            let (action, log_prob_stop) = select_stop_action(&sc.probs, 0.0, 0.0, rng);
            let (hop, reward) = match action {
                Action::Stop => (None, STOP_REWARD),
                Action::Wait => {
                    let s = sample_hop(hc.mu, self.sigma, rng);
                    (Some(s), -(s.delta - TARGET) * (s.delta - TARGET))
                }
            };
            let trace = EpisodeTrace {
                steps: vec![StepRecord {
                    time: self.t,
                    hidden: self.h.clone(),
                    probs: self.y.clone(),
                    stop_probs: sc.probs,
                    action: Some(action),
                    log_prob_stop,
                    hop,
                    baseline: 0.0,
                }],
                label: 0,
                horizon: 1.0,
                prediction: self.y.clone(),
                halting_time: self.t,
                reward,
                sigma: self.sigma,
            };
            let seeds = &episode_seeds(&trace, 0.0, 1.0, episodes)[0];
            self.stop.backward(&sc, &seeds.stop_logits);
            if trace.steps[0].hop.is_some() {
                self.hop.backward(&hc, seeds.hop_mu);
            }
        }
    }

    /// Central differences of `-J`.
    pub fn numeric_gradient(&mut self) -> Vec<f64> {
        let eps = 1e-6;
        let mut out = Vec::new();
        for p in 0..self.params().len() {
            for i in 0..self.params()[p].len() {
                let orig = self.params()[p].value.data[i];
                self.params_mut()[p].value.data[i] = orig + eps;
                let plus = -self.expected_reward();
                self.params_mut()[p].value.data[i] = orig - eps;
                let minus = -self.expected_reward();
                self.params_mut()[p].value.data[i] = orig;
                out.push((plus - minus) / (2.0 * eps));
            }
        }
        out
    }

    pub fn analytic_gradient(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.grad.data.clone()).collect()
    }
}

/// `|a - b| / |b|` in the Euclidean norm.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}
