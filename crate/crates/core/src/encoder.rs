//! GRU-D prefix encoder.
//!
//! The hidden state is updated at every merged-grid observation and decayed
//! analytically in between, so a prefix embedding exists at any real time:
//!
//! ```text
//! γ_x[d] = exp(-max(0, wx[d] * s[d] + bx[d]))     s[d]: time since var d was last seen
//! γ_h[i] = exp(-max(0, wh[i] * Δ + bh[i]))         Δ: time since the last update
//! x̂[d]  = m[d] x[d] + (1 - m[d]) (γ_x[d] x_prev[d] + (1 - γ_x[d]) x̃[d])
//! ĥ      = γ_h ⊙ h
//! r      = σ(W_r x̂ + U_r ĥ + b_r)
//! z      = σ(W_z x̂ + U_z ĥ + b_z)
//! h̃      = tanh(W x̂ + U (r ⊙ ĥ) + V m + b)
//! h'     = (1 - z) ⊙ ĥ + z ⊙ h̃
//! ```
//!
//! `x̃` is the running mean of the instance's own earlier values, zero while
//! a variable is unobserved (the training mean after z-scoring).

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::nn::{ParamMatrix, Parameterized, Rng};
use crate::series::{union_time_grid, GridPoint, IrregularSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrudParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_r: ParamMatrix,
    pub u_r: ParamMatrix,
    pub b_r: ParamMatrix,
    pub w_z: ParamMatrix,
    pub u_z: ParamMatrix,
    pub b_z: ParamMatrix,
    pub w_c: ParamMatrix,
    pub u_c: ParamMatrix,
    pub v_c: ParamMatrix,
    pub b_c: ParamMatrix,
    /// Per-variable input decay rate and offset.
    pub decay_x_w: ParamMatrix,
    pub decay_x_b: ParamMatrix,
    /// Per-unit hidden decay rate and offset.
    pub decay_h_w: ParamMatrix,
    pub decay_h_b: ParamMatrix,
}

impl GrudParams {
    pub fn new(input_size: usize, hidden_size: usize, rng: &mut Rng) -> Self {
        let (d, h) = (input_size, hidden_size);
        let mut decay = |rows| {
            let mut p = ParamMatrix::uniform(rows, 1, rng);
            p.decay = false;
            p
        };
        let decay_x_w = decay(d);
        let decay_h_w = decay(h);
        Self {
            input_size,
            hidden_size,
            w_r: ParamMatrix::uniform(h, d, rng),
            u_r: ParamMatrix::uniform(h, h, rng),
            b_r: ParamMatrix::bias(h),
            w_z: ParamMatrix::uniform(h, d, rng),
            u_z: ParamMatrix::uniform(h, h, rng),
            b_z: ParamMatrix::bias(h),
            w_c: ParamMatrix::uniform(h, d, rng),
            u_c: ParamMatrix::uniform(h, h, rng),
            v_c: ParamMatrix::uniform(h, d, rng),
            b_c: ParamMatrix::bias(h),
            decay_x_w,
            decay_x_b: ParamMatrix::bias(d),
            decay_h_w,
            decay_h_b: ParamMatrix::bias(h),
        }
    }

    /// All-zero parameters; every gate sits at 0.5 and every decay at 1.
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let mut p = Self::new(input_size, hidden_size, &mut Rng::new(0));
        for m in p.params_mut() {
            m.value.fill(0.0);
        }
        p
    }

    pub fn init_state(&self) -> GrudState {
        GrudState::new(self.input_size, self.hidden_size)
    }

    fn hidden_decay(&self, gap: f64) -> (Vec<f64>, Vec<f64>) {
        let pre: Vec<f64> = (0..self.hidden_size)
            .map(|i| self.decay_h_w.value.data[i] * gap + self.decay_h_b.value.data[i])
            .collect();
        let gamma = pre.iter().map(|&a| math::exp(-a.max(0.0))).collect();
        (pre, gamma)
    }

    /// One GRU-D update at `time`, returning the new state.
    pub fn step(&self, state: &GrudState, time: f64, values: &[f64], mask: &[bool]) -> Result<GrudState> {
        self.step_cached(state, time, values, mask).map(|(s, _)| s)
    }

    /// As [`step`](Self::step), also returning what the backward pass needs.
    pub fn step_cached(
        &self,
        state: &GrudState,
        time: f64,
        values: &[f64],
        mask: &[bool],
    ) -> Result<(GrudState, StepCache)> {
        let (d, h) = (self.input_size, self.hidden_size);
        for (len, context) in [(values.len(), "step values"), (mask.len(), "step mask")] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: d,
                    actual: len,
                });
            }
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidArgument("step mask has no observed variable".into()));
        }
        if !(time >= state.last_update_time) {
            return Err(Error::TimeRegression {
                time,
                last: state.last_update_time,
            });
        }

        let mut s = vec![0.0; d];
        let mut pre_x = vec![0.0; d];
        let mut gamma_x = vec![0.0; d];
        let mut x_mean = vec![0.0; d];
        let mut x_hat = vec![0.0; d];
        let m: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        for k in 0..d {
            let last = state.last_obs_time[k];
            s[k] = if last.is_finite() { time - last } else { time };
            pre_x[k] = self.decay_x_w.value.data[k] * s[k] + self.decay_x_b.value.data[k];
            gamma_x[k] = math::exp(-pre_x[k].max(0.0));
            x_mean[k] = state.running_mean(k);
            x_hat[k] = if mask[k] {
                values[k]
            } else {
                gamma_x[k] * state.last_value[k] + (1.0 - gamma_x[k]) * x_mean[k]
            };
        }

        let gap = time - state.last_update_time;
        let (pre_h, gamma_h) = self.hidden_decay(gap);
        let h_hat: Vec<f64> = state.h.iter().zip(&gamma_h).map(|(a, g)| a * g).collect();

        let mut a_r = self.b_r.values().to_vec();
        self.w_r.value.mul_vec_acc(&x_hat, &mut a_r);
        self.u_r.value.mul_vec_acc(&h_hat, &mut a_r);
        let r: Vec<f64> = a_r.iter().map(|&a| math::sigmoid(a)).collect();

        let mut a_z = self.b_z.values().to_vec();
        self.w_z.value.mul_vec_acc(&x_hat, &mut a_z);
        self.u_z.value.mul_vec_acc(&h_hat, &mut a_z);
        let z: Vec<f64> = a_z.iter().map(|&a| math::sigmoid(a)).collect();

        let rh: Vec<f64> = r.iter().zip(&h_hat).map(|(a, b)| a * b).collect();
        let mut a_c = self.b_c.values().to_vec();
        self.w_c.value.mul_vec_acc(&x_hat, &mut a_c);
        self.u_c.value.mul_vec_acc(&rh, &mut a_c);
        self.v_c.value.mul_vec_acc(&m, &mut a_c);
        let h_tilde: Vec<f64> = a_c.iter().map(|&a| math::tanh(a)).collect();

        let h_new: Vec<f64> = (0..h)
            .map(|i| (1.0 - z[i]) * h_hat[i] + z[i] * h_tilde[i])
            .collect();

        let mut next = state.clone();
        next.h = h_new;
        next.last_update_time = time;
        for k in 0..d {
            if mask[k] {
                next.last_value[k] = values[k];
                next.last_obs_time[k] = time;
                next.running_sum[k] += values[k];
                next.running_count[k] += 1;
            }
        }

        let cache = StepCache {
            mask: m,
            s,
            pre_x,
            gamma_x,
            x_prev: state.last_value.clone(),
            x_mean,
            x_hat,
            gap,
            pre_h,
            gamma_h,
            h_prev: state.h.clone(),
            h_hat,
            r,
            z,
            rh,
            h_tilde,
        };
        Ok((next, cache))
    }

    /// Hidden state decayed to `query_time` without consuming input. Queries
    /// earlier than the last update are treated as a zero gap.
    pub fn decay_only(&self, state: &GrudState, query_time: f64) -> Vec<f64> {
        self.decay_cached(state, query_time).0
    }

    pub fn decay_cached(&self, state: &GrudState, query_time: f64) -> (Vec<f64>, DecayCache) {
        let gap = (query_time - state.last_update_time).max(0.0);
        let (pre, gamma) = self.hidden_decay(gap);
        let out = state.h.iter().zip(&gamma).map(|(a, g)| a * g).collect();
        (
            out,
            DecayCache {
                gap,
                pre,
                gamma,
                h_src: state.h.clone(),
            },
        )
    }

    fn accumulate_hidden_decay(&mut self, gap: f64, pre: &[f64], gamma: &[f64], dgamma: &[f64]) {
        for i in 0..self.hidden_size {
            if pre[i] > 0.0 {
                let da = -dgamma[i] * gamma[i];
                self.decay_h_w.grad.data[i] += da * gap;
                self.decay_h_b.grad.data[i] += da;
            }
        }
    }

    /// Backward through [`decay_cached`](Self::decay_cached): accumulates the
    /// decay-parameter gradients and returns the gradient on the source
    /// hidden state.
    pub fn decay_backward(&mut self, cache: &DecayCache, dh_query: &[f64]) -> Vec<f64> {
        let dgamma: Vec<f64> = dh_query.iter().zip(&cache.h_src).map(|(d, h)| d * h).collect();
        self.accumulate_hidden_decay(cache.gap, &cache.pre, &cache.gamma, &dgamma);
        dh_query.iter().zip(&cache.gamma).map(|(d, g)| d * g).collect()
    }

    /// Backward through one step: accumulates parameter gradients and
    /// returns the gradient on the previous hidden state.
    pub fn step_backward(&mut self, c: &StepCache, dh_new: &[f64]) -> Vec<f64> {
        let (d, h) = (self.input_size, self.hidden_size);
        let mut dh_hat = vec![0.0; h];
        let mut da_c = vec![0.0; h];
        let mut da_z = vec![0.0; h];
        for i in 0..h {
            let dz = dh_new[i] * (c.h_tilde[i] - c.h_hat[i]);
            let dh_tilde = dh_new[i] * c.z[i];
            dh_hat[i] = dh_new[i] * (1.0 - c.z[i]);
            da_c[i] = dh_tilde * (1.0 - c.h_tilde[i] * c.h_tilde[i]);
            da_z[i] = dz * c.z[i] * (1.0 - c.z[i]);
        }
        let mut dx_hat = vec![0.0; d];

        // Candidate.
        self.w_c.grad.add_outer(&da_c, &c.x_hat, 1.0);
        self.u_c.grad.add_outer(&da_c, &c.rh, 1.0);
        self.v_c.grad.add_outer(&da_c, &c.mask, 1.0);
        for (g, v) in self.b_c.grad.data.iter_mut().zip(&da_c) {
            *g += v;
        }
        self.w_c.value.mul_t_vec_acc(&da_c, &mut dx_hat);
        let mut drh = vec![0.0; h];
        self.u_c.value.mul_t_vec_acc(&da_c, &mut drh);
        let mut da_r = vec![0.0; h];
        for i in 0..h {
            dh_hat[i] += drh[i] * c.r[i];
            da_r[i] = drh[i] * c.h_hat[i] * c.r[i] * (1.0 - c.r[i]);
        }

        // Update gate.
        self.w_z.grad.add_outer(&da_z, &c.x_hat, 1.0);
        self.u_z.grad.add_outer(&da_z, &c.h_hat, 1.0);
        for (g, v) in self.b_z.grad.data.iter_mut().zip(&da_z) {
            *g += v;
        }
        self.w_z.value.mul_t_vec_acc(&da_z, &mut dx_hat);
        self.u_z.value.mul_t_vec_acc(&da_z, &mut dh_hat);

        // Reset gate.
        self.w_r.grad.add_outer(&da_r, &c.x_hat, 1.0);
        self.u_r.grad.add_outer(&da_r, &c.h_hat, 1.0);
        for (g, v) in self.b_r.grad.data.iter_mut().zip(&da_r) {
            *g += v;
        }
        self.w_r.value.mul_t_vec_acc(&da_r, &mut dx_hat);
        self.u_r.value.mul_t_vec_acc(&da_r, &mut dh_hat);

        // Input decay only matters for unobserved variables.
        for k in 0..d {
            if c.mask[k] == 0.0 && c.pre_x[k] > 0.0 {
                let dgamma = dx_hat[k] * (c.x_prev[k] - c.x_mean[k]);
                let da = -dgamma * c.gamma_x[k];
                self.decay_x_w.grad.data[k] += da * c.s[k];
                self.decay_x_b.grad.data[k] += da;
            }
        }

        // Hidden decay.
        let dgamma: Vec<f64> = dh_hat.iter().zip(&c.h_prev).map(|(a, b)| a * b).collect();
        self.accumulate_hidden_decay(c.gap, &c.pre_h, &c.gamma_h, &dgamma);
        dh_hat.iter().zip(&c.gamma_h).map(|(a, g)| a * g).collect()
    }

    /// Backpropagates through an unrolled tape. `queries[k] = (n, cache, dh)`
    /// says a hidden vector was read after `n` steps, decayed with `cache`,
    /// and received gradient `dh`.
    pub fn backward_tape(&mut self, steps: &[StepCache], queries: &[(usize, &DecayCache, &[f64])]) {
        let h = self.hidden_size;
        let mut d_state = vec![vec![0.0; h]; steps.len() + 1];
        for &(n, cache, dh) in queries {
            let ds = self.decay_backward(cache, dh);
            for (a, b) in d_state[n].iter_mut().zip(&ds) {
                *a += b;
            }
        }
        for i in (0..steps.len()).rev() {
            if d_state[i + 1].iter().all(|&v| v == 0.0) {
                continue;
            }
            let upstream = core::mem::take(&mut d_state[i + 1]);
            let dprev = self.step_backward(&steps[i], &upstream);
            for (a, b) in d_state[i].iter_mut().zip(&dprev) {
                *a += b;
            }
        }
    }
}

impl Parameterized for GrudParams {
    fn params(&self) -> Vec<&ParamMatrix> {
        vec![
            &self.w_r,
            &self.u_r,
            &self.b_r,
            &self.w_z,
            &self.u_z,
            &self.b_z,
            &self.w_c,
            &self.u_c,
            &self.v_c,
            &self.b_c,
            &self.decay_x_w,
            &self.decay_x_b,
            &self.decay_h_w,
            &self.decay_h_b,
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut ParamMatrix> {
        vec![
            &mut self.w_r,
            &mut self.u_r,
            &mut self.b_r,
            &mut self.w_z,
            &mut self.u_z,
            &mut self.b_z,
            &mut self.w_c,
            &mut self.u_c,
            &mut self.v_c,
            &mut self.b_c,
            &mut self.decay_x_w,
            &mut self.decay_x_b,
            &mut self.decay_h_w,
            &mut self.decay_h_b,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrudState {
    pub h: Vec<f64>,
    pub last_value: Vec<f64>,
    /// `-inf` until the variable is first observed.
    pub last_obs_time: Vec<f64>,
    pub running_sum: Vec<f64>,
    pub running_count: Vec<u32>,
    pub last_update_time: f64,
}

impl GrudState {
    pub fn new(input_size: usize, hidden_size: usize) -> Self {
        Self {
            h: vec![0.0; hidden_size],
            last_value: vec![0.0; input_size],
            last_obs_time: vec![f64::NEG_INFINITY; input_size],
            running_sum: vec![0.0; input_size],
            running_count: vec![0; input_size],
            last_update_time: 0.0,
        }
    }

    /// Mean of the values of variable `d` seen so far, 0 if none.
    pub fn running_mean(&self, d: usize) -> f64 {
        match self.running_count[d] {
            0 => 0.0,
            n => self.running_sum[d] / n as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepCache {
    mask: Vec<f64>,
    s: Vec<f64>,
    pre_x: Vec<f64>,
    gamma_x: Vec<f64>,
    x_prev: Vec<f64>,
    x_mean: Vec<f64>,
    x_hat: Vec<f64>,
    gap: f64,
    pre_h: Vec<f64>,
    gamma_h: Vec<f64>,
    h_prev: Vec<f64>,
    h_hat: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    rh: Vec<f64>,
    h_tilde: Vec<f64>,
}

impl StepCache {
    pub fn input_decay(&self) -> &[f64] {
        &self.gamma_x
    }

    pub fn hidden_decay(&self) -> &[f64] {
        &self.gamma_h
    }
}

#[derive(Debug, Clone)]
pub struct DecayCache {
    gap: f64,
    pre: Vec<f64>,
    gamma: Vec<f64>,
    h_src: Vec<f64>,
}

impl DecayCache {
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
}

/// Walks a series' merged grid forward in time, absorbing observations
/// into the encoder state. Optionally records a tape for backpropagation.
#[derive(Debug, Clone)]
pub struct PrefixCursor {
    grid: Vec<GridPoint>,
    next: usize,
    state: GrudState,
    tape: Option<Vec<StepCache>>,
}

impl PrefixCursor {
    pub fn new(params: &GrudParams, series: &IrregularSeries, record: bool) -> Self {
        Self {
            grid: union_time_grid(series),
            next: 0,
            state: params.init_state(),
            tape: record.then(Vec::new),
        }
    }

    /// Absorb every grid point with time `<= t`.
    pub fn advance_to(&mut self, params: &GrudParams, t: f64) -> Result<()> {
        while self.next < self.grid.len() && self.grid[self.next].time <= t {
            self.absorb_next(params)?;
        }
        Ok(())
    }

    /// Absorb the next grid point regardless of time; returns its time.
    pub fn absorb_next(&mut self, params: &GrudParams) -> Result<Option<f64>> {
        let Some(p) = self.grid.get(self.next) else {
            return Ok(None);
        };
        let (next, cache) = params.step_cached(&self.state, p.time, &p.values, &p.mask)?;
        self.state = next;
        if let Some(tape) = self.tape.as_mut() {
            tape.push(cache);
        }
        self.next += 1;
        Ok(Some(p.time))
    }

    pub fn state(&self) -> &GrudState {
        &self.state
    }

    pub fn steps_taken(&self) -> usize {
        self.next
    }

    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }

    /// Time of the first grid point not yet absorbed.
    pub fn next_time(&self) -> Option<f64> {
        self.grid.get(self.next).map(|p| p.time)
    }

    pub fn into_tape(self) -> Vec<StepCache> {
        self.tape.unwrap_or_default()
    }
}

/// Embedding of the prefix of `series` up to `t`, together with the state
/// after the last absorbed observation.
pub fn encode_prefix(series: &IrregularSeries, t: f64, params: &GrudParams) -> Result<(Vec<f64>, GrudState)> {
    let mut cursor = PrefixCursor::new(params, series, false);
    cursor.advance_to(params, t)?;
    let h = params.decay_only(cursor.state(), t);
    Ok((h, cursor.state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_check;
    use crate::series::Observation;

    fn random_params(d: usize, h: usize, seed: u64) -> GrudParams {
        let mut rng = Rng::new(seed);
        let mut p = GrudParams::new(d, h, &mut rng);
        for b in [&mut p.b_r, &mut p.b_z, &mut p.b_c, &mut p.decay_x_b, &mut p.decay_h_b] {
            for v in b.value.data.iter_mut() {
                *v = rng.normal(0.0, 0.5);
            }
        }
        // Bias the decay rates positive so the max(0, .) branches are active.
        for w in [&mut p.decay_x_w, &mut p.decay_h_w] {
            for v in w.value.data.iter_mut() {
                *v = v.abs() + 0.2;
            }
        }
        p
    }

    #[test]
    fn fresh_state() {
        let p = GrudParams::zeros(2, 3);
        let s = p.init_state();
        assert!(s.h.iter().all(|&x| x == 0.0));
        assert_eq!(s.running_mean(0), 0.0);
        assert!(s.last_obs_time.iter().all(|t| *t == f64::NEG_INFINITY));
    }

    #[test]
    fn zero_parameters_fixed_point() {
        let p = GrudParams::zeros(2, 4);
        let (s, c) = p
            .step_cached(&p.init_state(), 0.4, &[3.0, -1.0], &[true, false])
            .unwrap();
        assert!(c.r.iter().all(|&x| x == 0.5));
        assert!(c.z.iter().all(|&x| x == 0.5));
        assert!(c.h_tilde.iter().all(|&x| x == 0.0));
        assert!(s.h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn decay_closed_form() {
        let mut p = GrudParams::zeros(1, 2);
        p.decay_h_b.value.data = vec![2.0, 0.0];
        let mut s = p.init_state();
        s.h = vec![1.0, 1.0];
        let h = p.decay_only(&s, 0.0);
        assert!((h[0] - 0.135_335_283_236_612_7).abs() < 1e-15);
        assert_eq!(h[1], 1.0);

        // Zero decay parameters never decay.
        let p = GrudParams::zeros(1, 2);
        assert_eq!(p.decay_only(&s, 123.0), s.h);
    }

    #[test]
    fn step_rejects_time_regression_and_empty_mask() {
        let p = random_params(1, 2, 1);
        let s = p.step(&p.init_state(), 0.5, &[1.0], &[true]).unwrap();
        assert!(matches!(
            p.step(&s, 0.4, &[1.0], &[true]),
            Err(Error::TimeRegression { .. })
        ));
        assert!(p.step(&s, 0.6, &[1.0], &[false]).is_err());
        assert!(p.step(&s, 0.6, &[1.0, 2.0], &[true, true]).is_err());
    }

    /// Textbook GRU, written independently of the GRU-D code.
    fn plain_gru(p: &GrudParams, h: &[f64], x: &[f64], extra_bias: &[f64]) -> Vec<f64> {
        let n = p.hidden_size;
        let mv = |m: &ParamMatrix, v: &[f64], i: usize| -> f64 {
            (0..v.len()).map(|j| m.value.get(i, j) * v[j]).sum()
        };
        let sig = |a: f64| 1.0 / (1.0 + (-a).exp());
        let r: Vec<f64> = (0..n)
            .map(|i| sig(mv(&p.w_r, x, i) + mv(&p.u_r, h, i) + p.b_r.value.data[i]))
            .collect();
        let z: Vec<f64> = (0..n)
            .map(|i| sig(mv(&p.w_z, x, i) + mv(&p.u_z, h, i) + p.b_z.value.data[i]))
            .collect();
        let rh: Vec<f64> = (0..n).map(|i| r[i] * h[i]).collect();
        (0..n)
            .map(|i| {
                let c = (mv(&p.w_c, x, i) + mv(&p.u_c, &rh, i) + p.b_c.value.data[i] + extra_bias[i])
                    .tanh();
                (1.0 - z[i]) * h[i] + z[i] * c
            })
            .collect()
    }

    #[test]
    fn reduces_to_plain_gru_without_decay() {
        let mut p = random_params(3, 5, 21);
        p.decay_h_w.value.fill(0.0);
        p.decay_h_b.value.fill(0.0);
        let mut rng = Rng::new(2);
        let mut state = p.init_state();
        state.h = (0..5).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        state.last_update_time = 0.3;
        let x = [0.4, -1.1, 2.0];
        let next = p.step(&state, 0.3, &x, &[true, true, true]).unwrap();
        // V m with an all-ones mask is a constant bias for the plain GRU.
        let vm: Vec<f64> = (0..5).map(|i| p.v_c.value.row(i).iter().sum()).collect();
        let expected = plain_gru(&p, &state.h, &x, &vm);
        for (a, b) in next.h.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn imputes_missing_variables_from_history() {
        let mut p = GrudParams::zeros(2, 2);
        p.decay_x_b.value.data = vec![0.0, 1.0];
        let s = p.step(&p.init_state(), 0.1, &[2.0, 4.0], &[true, true]).unwrap();
        let s = p.step(&s, 0.2, &[6.0, 0.0], &[true, false]).unwrap();
        assert_eq!(s.running_mean(0), 4.0);
        assert_eq!(s.running_mean(1), 4.0);
        assert_eq!(s.last_value, vec![6.0, 4.0]);

        // Variable 1 is unobserved: γ · x_prev + (1 - γ) · x̃ with γ = e^-1.
        let mut s2 = s.clone();
        s2.running_sum[1] = 1.0;
        let (_, c) = p.step_cached(&s2, 0.3, &[1.0, 0.0], &[true, false]).unwrap();
        let g = (-1.0f64).exp();
        assert!((c.x_hat[1] - (g * 4.0 + (1.0 - g) * 1.0)).abs() < 1e-14);
        assert_eq!(c.x_hat[0], 1.0);
    }

    fn series_from(points: &[(usize, f64, f64)], d: usize) -> IrregularSeries {
        let obs = points.iter().map(|&(variable, time, value)| Observation {
            variable,
            time,
            value,
        });
        IrregularSeries::new("t", d, obs, 0, 1.0, None).unwrap()
    }

    fn random_series(rng: &mut Rng, d: usize, n: usize) -> IrregularSeries {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut pts = Vec::new();
        for _ in 0..n {
            let v = rng.below(d);
            let t = rng.uniform();
            if seen.insert((v, t.to_bits())) {
                pts.push((v, t, rng.normal(0.0, 1.0)));
            }
        }
        series_from(&pts, d)
    }

    #[test]
    fn prefix_at_zero_is_initial_state() {
        let p = random_params(2, 3, 4);
        let s = series_from(&[(0, 0.2, 1.0), (1, 0.5, -1.0)], 2);
        let (h, _) = encode_prefix(&s, 0.0, &p).unwrap();
        assert!(h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn causality_under_future_mutation() {
        let p = random_params(3, 6, 8);
        let mut rng = Rng::new(99);
        for _ in 0..200 {
            let base = random_series(&mut rng, 3, 12);
            let t = rng.uniform();
            let mut pts: Vec<(usize, f64, f64)> = base
                .observations()
                .filter(|o| o.time <= t)
                .map(|o| (o.variable, o.time, o.value))
                .collect();
            let past_only = series_from(&pts, 3);
            for _ in 0..5 {
                let v = rng.below(3);
                let ft = t + (1.0 - t) * rng.uniform();
                if ft > t && !pts.iter().any(|q| q.0 == v && q.1 == ft) {
                    pts.push((v, ft, rng.normal(0.0, 5.0)));
                }
            }
            let mutated = series_from(&pts, 3);
            let a = encode_prefix(&past_only, t, &p).unwrap().0;
            let b = encode_prefix(&mutated, t, &p).unwrap().0;
            assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn incremental_encoding_matches_recomputation() {
        let p = random_params(2, 4, 5);
        let mut rng = Rng::new(1);
        let s = random_series(&mut rng, 2, 15);
        let mut cursor = PrefixCursor::new(&p, &s, false);
        for k in 1..=10 {
            let t = k as f64 / 10.0;
            cursor.advance_to(&p, t).unwrap();
            let resumed = p.decay_only(cursor.state(), t);
            let fresh = encode_prefix(&s, t, &p).unwrap().0;
            assert_eq!(resumed, fresh);
        }
    }

    #[test]
    fn decay_shrinks_norm_monotonically() {
        let p = random_params(1, 6, 3);
        let mut rng = Rng::new(6);
        let mut s = p.init_state();
        s.h = (0..6).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let mut gaps: Vec<f64> = (0..50).map(|_| rng.uniform() * 3.0).collect();
        gaps.sort_by(f64::total_cmp);
        let norms: Vec<f64> = gaps
            .iter()
            .map(|&g| p.decay_only(&s, g).iter().map(|x| x * x).sum::<f64>())
            .collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]));
    }

    /// Unrolls `series`, reads the hidden state at each query time and
    /// returns `Σ_k c_k · h_{t_k}` for fixed random weights `c_k`.
    fn unroll_loss(p: &GrudParams, s: &IrregularSeries, queries: &[f64], c: &[Vec<f64>]) -> f64 {
        let mut cursor = PrefixCursor::new(p, s, false);
        let mut loss = 0.0;
        for (t, ck) in queries.iter().zip(c) {
            cursor.advance_to(p, *t).unwrap();
            let h = p.decay_only(cursor.state(), *t);
            loss += h.iter().zip(ck).map(|(a, b)| a * b).sum::<f64>();
        }
        loss
    }

    #[test]
    fn five_step_unroll_gradient_check() {
        let mut p = random_params(2, 4, 17);
        let s = series_from(
            &[(0, 0.1, 1.2), (1, 0.2, -0.7), (1, 0.35, 0.5), (0, 0.55, -1.5), (0, 0.8, 0.9)],
            2,
        );
        p.decay_x_b.value.data = vec![0.1, 0.1];
        let queries = [0.05, 0.3, 0.5, 0.62, 0.9];
        let mut rng = Rng::new(12);
        let c: Vec<Vec<f64>> = (0..queries.len())
            .map(|_| (0..4).map(|_| rng.normal(0.0, 1.0)).collect())
            .collect();

        let mut cursor = PrefixCursor::new(&p, &s, true);
        let mut reads = Vec::new();
        for (t, ck) in queries.iter().zip(&c) {
            cursor.advance_to(&p, *t).unwrap();
            let (_, cache) = p.decay_cached(cursor.state(), *t);
            reads.push((cursor.steps_taken(), cache, ck.clone()));
        }
        assert_eq!(cursor.steps_taken(), 5);
        let tape = cursor.into_tape();
        let q: Vec<(usize, &DecayCache, &[f64])> =
            reads.iter().map(|(n, cache, ck)| (*n, cache, ck.as_slice())).collect();
        p.zero_grad();
        p.backward_tape(&tape, &q);
        let report = finite_diff_check(&mut p, |p| unroll_loss(p, &s, &queries, &c), 1e-3);
        assert!(report.passed, "{report:?}");
        // The active decay branches must have produced gradients.
        assert!(p.decay_h_w.grad.data.iter().any(|&g| g != 0.0));
        assert!(p.decay_x_w.grad.data.iter().any(|&g| g != 0.0));
    }

    proptest::proptest! {
        #[test]
        fn decays_lie_in_unit_interval_and_state_stays_bounded(seed in 0u64..500) {
            let p = random_params(2, 5, seed);
            let mut rng = Rng::new(seed + 1);
            let s = random_series(&mut rng, 2, 20);
            let mut cursor = PrefixCursor::new(&p, &s, true);
            cursor.advance_to(&p, 1.0).unwrap();
            proptest::prop_assert!(cursor.state().h.iter().all(|x| x.abs() <= 1.0));
            for c in cursor.into_tape() {
                proptest::prop_assert!(c.input_decay().iter().all(|&g| g > 0.0 && g <= 1.0));
                proptest::prop_assert!(c.hidden_decay().iter().all(|&g| g > 0.0 && g <= 1.0));
            }
        }
    }
}
