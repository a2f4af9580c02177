//! Halting policy: a two-way Stop/Wait softmax, a Gaussian hop-size policy
//! with a ReLU mean, and the ε-greedy exploration schedule.
//!
//! Both policies read the prefix embedding `h`, the intermediate class
//! probabilities `ŷ` and the candidate time `t` (as a fraction of the
//! horizon).

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::nn::{softmax, ParamMatrix, Parameterized, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Stop,
    Wait,
}

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Stop => 0,
            Action::Wait => 1,
        }
    }
}

fn affine3(w: &ParamMatrix, u: &ParamMatrix, v: &ParamMatrix, b: &ParamMatrix, h: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    let mut out = b.values().to_vec();
    w.value.mul_vec_acc(h, &mut out);
    u.value.mul_vec_acc(y, &mut out);
    for (o, vv) in out.iter_mut().zip(v.values()) {
        *o += vv * t;
    }
    out
}

fn affine3_backward(
    w: &mut ParamMatrix,
    u: &mut ParamMatrix,
    v: &mut ParamMatrix,
    b: &mut ParamMatrix,
    h: &[f64],
    y: &[f64],
    t: f64,
    d_out: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    w.grad.add_outer(d_out, h, 1.0);
    u.grad.add_outer(d_out, y, 1.0);
    for (g, d) in v.grad.data.iter_mut().zip(d_out) {
        *g += d * t;
    }
    for (g, d) in b.grad.data.iter_mut().zip(d_out) {
        *g += d;
    }
    let mut dh = vec![0.0; h.len()];
    w.value.mul_t_vec_acc(d_out, &mut dh);
    let mut dy = vec![0.0; y.len()];
    u.value.mul_t_vec_acc(d_out, &mut dy);
    (dh, dy)
}

/// `p = softmax(W h + U ŷ + V t + b)` with `p[0]` = Stop, `p[1]` = Wait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopPolicyParams {
    pub w: ParamMatrix,
    pub u: ParamMatrix,
    pub v: ParamMatrix,
    pub b: ParamMatrix,
}

#[derive(Debug, Clone)]
pub struct StopCache {
    h: Vec<f64>,
    y: Vec<f64>,
    t: f64,
    pub probs: [f64; 2],
}

impl StopPolicyParams {
    pub fn new(hidden_size: usize, num_classes: usize, rng: &mut Rng) -> Self {
        let fan_in = hidden_size + num_classes + 1;
        Self {
            w: ParamMatrix::uniform_fan_in(2, hidden_size, fan_in, rng),
            u: ParamMatrix::uniform_fan_in(2, num_classes, fan_in, rng),
            v: ParamMatrix::uniform_fan_in(2, 1, fan_in, rng),
            b: ParamMatrix::bias(2),
        }
    }

    pub fn stop_probability(&self, h: &[f64], y: &[f64], t: f64) -> [f64; 2] {
        self.forward(h, y, t).probs
    }

    pub fn forward(&self, h: &[f64], y: &[f64], t: f64) -> StopCache {
        let p = softmax(&affine3(&self.w, &self.u, &self.v, &self.b, h, y, t));
        StopCache {
            h: h.to_vec(),
            y: y.to_vec(),
            t,
            probs: [p[0], p[1]],
        }
    }

    /// Backward from a gradient on the two logits; returns `(dh, dŷ)`.
    pub fn backward(&mut self, cache: &StopCache, d_logits: &[f64; 2]) -> (Vec<f64>, Vec<f64>) {
        affine3_backward(
            &mut self.w,
            &mut self.u,
            &mut self.v,
            &mut self.b,
            &cache.h,
            &cache.y,
            cache.t,
            d_logits,
        )
    }
}

impl Parameterized for StopPolicyParams {
    fn params(&self) -> Vec<&ParamMatrix> {
        vec![&self.w, &self.u, &self.v, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamMatrix> {
        vec![&mut self.w, &mut self.u, &mut self.v, &mut self.b]
    }
}

/// Log-probability of `action` under `p`, floored so it stays finite.
pub fn action_log_prob(p: &[f64; 2], action: Action) -> f64 {
    math::ln(p[action.index()].max(1e-300))
}

/// ε-greedy Stop/Wait selection. With probability `1 - ε` the action is
/// drawn from `p`; otherwise it is a random action that is Wait with
/// probability `wait_bias`. The returned log-probability is always that
/// of the policy itself.
pub fn select_stop_action(p: &[f64; 2], epsilon: f64, wait_bias: f64, rng: &mut Rng) -> (Action, f64) {
    let action = if epsilon > 0.0 && rng.bernoulli(epsilon) {
        if rng.bernoulli(wait_bias) {
            Action::Wait
        } else {
            Action::Stop
        }
    } else if rng.bernoulli(p[0]) {
        Action::Stop
    } else {
        Action::Wait
    };
    (action, action_log_prob(p, action))
}

/// `μ = relu(W h + U ŷ + V t + b)`; hops are `|g|` with `g ~ N(μ, σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopPolicyParams {
    pub w: ParamMatrix,
    pub u: ParamMatrix,
    pub v: ParamMatrix,
    pub b: ParamMatrix,
}

#[derive(Debug, Clone)]
pub struct HopCache {
    h: Vec<f64>,
    y: Vec<f64>,
    t: f64,
    pre: f64,
    pub mu: f64,
}

/// One hop draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopSample {
    pub mu: f64,
    /// The raw Gaussian draw before taking its absolute value.
    pub raw: f64,
    pub delta: f64,
    /// `log N(raw; μ, σ)`.
    pub log_density: f64,
}

impl HopPolicyParams {
    pub fn new(hidden_size: usize, num_classes: usize, rng: &mut Rng) -> Self {
        let fan_in = hidden_size + num_classes + 1;
        Self {
            w: ParamMatrix::uniform_fan_in(1, hidden_size, fan_in, rng),
            u: ParamMatrix::uniform_fan_in(1, num_classes, fan_in, rng),
            v: ParamMatrix::uniform_fan_in(1, 1, fan_in, rng),
            b: ParamMatrix::bias(1),
        }
    }

    pub fn forward(&self, h: &[f64], y: &[f64], t: f64) -> HopCache {
        let pre = affine3(&self.w, &self.u, &self.v, &self.b, h, y, t)[0];
        HopCache {
            h: h.to_vec(),
            y: y.to_vec(),
            t,
            pre,
            mu: pre.max(0.0),
        }
    }

    pub fn mean(&self, h: &[f64], y: &[f64], t: f64) -> f64 {
        self.forward(h, y, t).mu
    }

    /// Backward from a gradient on μ; returns `(dh, dŷ)`.
    pub fn backward(&mut self, cache: &HopCache, d_mu: f64) -> (Vec<f64>, Vec<f64>) {
        let d = if cache.pre > 0.0 { d_mu } else { 0.0 };
        affine3_backward(
            &mut self.w,
            &mut self.u,
            &mut self.v,
            &mut self.b,
            &cache.h,
            &cache.y,
            cache.t,
            &[d],
        )
    }
}

impl Parameterized for HopPolicyParams {
    fn params(&self) -> Vec<&ParamMatrix> {
        vec![&self.w, &self.u, &self.v, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamMatrix> {
        vec![&mut self.w, &mut self.u, &mut self.v, &mut self.b]
    }
}

pub fn gaussian_log_density(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - math::ln(sigma * math::sqrt(2.0 * core::f64::consts::PI))
}

/// Draws `g ~ N(μ, σ)` and returns `Δt = |g|` with the log-density of `g`.
pub fn sample_hop(mu: f64, sigma: f64, rng: &mut Rng) -> HopSample {
    hop_from_raw(mu, sigma, rng.normal(mu, sigma))
}

pub fn hop_from_raw(mu: f64, sigma: f64, raw: f64) -> HopSample {
    HopSample {
        mu,
        raw,
        delta: math::abs(raw),
        log_density: gaussian_log_density(raw, mu, sigma),
    }
}

/// `ε = exp(-i)` with `i` advancing by `7 / E` per epoch, so ε decays from
/// 1 at the first epoch to `e^-7` after `E` epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub total_epochs: usize,
    /// Probability that an exploratory action is Wait.
    pub wait_bias: f64,
}

impl EpsilonSchedule {
    pub fn new(total_epochs: usize) -> Self {
        Self {
            total_epochs,
            wait_bias: 0.9,
        }
    }

    pub fn epsilon_at(&self, epoch: usize) -> f64 {
        let e = self.total_epochs.max(1) as f64;
        math::exp(-7.0 * epoch as f64 / e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_diff_check, log_softmax};

    #[test]
    fn zero_stop_policy_is_even() {
        let mut p = StopPolicyParams::new(3, 2, &mut Rng::new(1));
        for m in p.params_mut() {
            m.value.fill(0.0);
        }
        assert_eq!(p.stop_probability(&[1.0, 2.0, 3.0], &[0.2, 0.8], 0.4), [0.5, 0.5]);
    }

    #[test]
    fn stop_log_prob_gradient_check() {
        let mut rng = Rng::new(31);
        let mut p = StopPolicyParams::new(4, 3, &mut rng);
        let h: Vec<f64> = (0..4).map(|_| rng.normal(0.0, 1.0)).collect();
        let y = [0.2, 0.5, 0.3];
        let t = 0.37;
        for action in [Action::Stop, Action::Wait] {
            p.zero_grad();
            let cache = p.forward(&h, &y, t);
            let mut d = [-cache.probs[0], -cache.probs[1]];
            d[action.index()] += 1.0;
            p.backward(&cache, &d);
            let logp = |p: &StopPolicyParams| {
                let logits = affine3(&p.w, &p.u, &p.v, &p.b, &h, &y, t);
                log_softmax(&logits)[action.index()]
            };
            let report = finite_diff_check(&mut p, logp, 1e-4);
            assert!(report.passed, "{report:?}");
        }
    }

    #[test]
    fn greedy_and_forced_exploration() {
        let mut rng = Rng::new(2);
        for _ in 0..1000 {
            assert_eq!(select_stop_action(&[1.0, 0.0], 0.0, 0.9, &mut rng).0, Action::Stop);
            let (a, lp) = select_stop_action(&[0.7, 0.3], 1.0, 1.0, &mut rng);
            assert_eq!(a, Action::Wait);
            assert!((lp - 0.3f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn stop_frequency_matches_policy() {
        let mut rng = Rng::new(77);
        let p_stop = 0.37;
        let n = 100_000;
        let stops = (0..n)
            .filter(|_| select_stop_action(&[p_stop, 1.0 - p_stop], 0.0, 0.9, &mut rng).0 == Action::Stop)
            .count();
        let sd = (p_stop * (1.0 - p_stop) / n as f64).sqrt();
        assert!((stops as f64 / n as f64 - p_stop).abs() <= 3.0 * sd);
    }

    #[test]
    fn hop_absolute_value_and_density() {
        let s = hop_from_raw(0.2, 0.1, -0.05);
        assert!((s.delta - 0.05).abs() < 1e-15);
        let mode = gaussian_log_density(0.3, 0.3, 0.25);
        assert!((mode + (0.25 * (2.0 * core::f64::consts::PI).sqrt()).ln()).abs() < 1e-15);
    }

    #[test]
    fn small_sigma_concentrates_hops_on_the_mean() {
        let mut rng = Rng::new(4);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_hop(0.3, 0.01, &mut rng).delta).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() <= 0.003);
    }

    #[test]
    fn hop_mean_gradient_check() {
        let mut rng = Rng::new(5);
        let mut p = HopPolicyParams::new(4, 2, &mut rng);
        p.b.value.data[0] = 1.0;
        let h: Vec<f64> = (0..4).map(|_| rng.normal(0.0, 0.5)).collect();
        let y = [0.6, 0.4];
        let (t, sigma, raw) = (0.2, 0.3, 0.45);
        let cache = p.forward(&h, &y, t);
        assert!(cache.mu > 0.0);
        // d log N(raw; μ, σ) / dμ = (raw - μ) / σ².
        p.backward(&cache, (raw - cache.mu) / (sigma * sigma));
        let report = finite_diff_check(
            &mut p,
            |p| gaussian_log_density(raw, p.mean(&h, &y, t), sigma),
            1e-4,
        );
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn relu_mean_is_never_negative() {
        let mut p = HopPolicyParams::new(2, 2, &mut Rng::new(3));
        p.b.value.data[0] = -10.0;
        let c = p.forward(&[1.0, 1.0], &[0.5, 0.5], 0.1);
        assert_eq!(c.mu, 0.0);
        let (dh, _) = p.backward(&c, 1.0);
        assert!(dh.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn epsilon_schedule_values() {
        let s = EpsilonSchedule::new(100);
        assert_eq!(s.epsilon_at(0), 1.0);
        assert!((s.epsilon_at(100) - 0.000_911_881_965_554_516_2).abs() < 1e-15);
        assert!((s.epsilon_at(50) - 0.030_197_383_422_318_5).abs() < 1e-15);
        assert!((0..100).all(|e| s.epsilon_at(e + 1) <= s.epsilon_at(e)));
    }
}
