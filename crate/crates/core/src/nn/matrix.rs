use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::nn::Rng;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `out += self * x`.
    pub fn mul_vec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *o += acc;
        }
    }

    /// `out += selfᵀ * y`.
    pub fn mul_t_vec_acc(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, yr) in y.iter().enumerate() {
            if *yr == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(r)) {
                *o += w * yr;
            }
        }
    }

    /// `self += scale * y xᵀ`.
    pub fn add_outer(&mut self, y: &[f64], x: &[f64], scale: f64) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        let cols = self.cols;
        for (r, yr) in y.iter().enumerate() {
            let s = yr * scale;
            if s == 0.0 {
                continue;
            }
            for (w, xi) in self.data[r * cols..(r + 1) * cols].iter_mut().zip(x) {
                *w += s * xi;
            }
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// A trainable matrix paired with its accumulated gradient.
///
/// `decay` marks whether L2 weight decay applies; it is set for weight
/// matrices and cleared for biases and decay-rate parameters. Only values
/// are serialized; gradients are rebuilt as zeros on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "StoredParam", into = "StoredParam")]
pub struct ParamMatrix {
    pub value: Matrix,
    pub grad: Matrix,
    pub decay: bool,
}

#[derive(Serialize, Deserialize, Clone)]
struct StoredParam {
    rows: usize,
    cols: usize,
    decay: bool,
    data: Vec<f64>,
}

impl From<StoredParam> for ParamMatrix {
    fn from(p: StoredParam) -> Self {
        let value = Matrix {
            rows: p.rows,
            cols: p.cols,
            data: p.data,
        };
        let grad = Matrix::zeros(p.rows, p.cols);
        Self {
            value,
            grad,
            decay: p.decay,
        }
    }
}

impl From<ParamMatrix> for StoredParam {
    fn from(p: ParamMatrix) -> Self {
        Self {
            rows: p.value.rows,
            cols: p.value.cols,
            decay: p.decay,
            data: p.value.data,
        }
    }
}

impl ParamMatrix {
    pub fn zeros(rows: usize, cols: usize, decay: bool) -> Self {
        Self {
            value: Matrix::zeros(rows, cols),
            grad: Matrix::zeros(rows, cols),
            decay,
        }
    }

    /// Weight matrix drawn uniformly from `[-1/sqrt(cols), 1/sqrt(cols)]`.
    pub fn uniform(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        Self::uniform_fan_in(rows, cols, cols, rng)
    }

    /// Weight matrix drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`,
    /// for blocks of a layer whose full input is wider than `cols`.
    pub fn uniform_fan_in(rows: usize, cols: usize, fan_in: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / math::sqrt(fan_in.max(1) as f64);
        let mut p = Self::zeros(rows, cols, true);
        for v in p.value.data.iter_mut() {
            *v = rng.uniform_range(-bound, bound);
        }
        p
    }

    /// Zero-initialised bias, exempt from weight decay.
    pub fn bias(rows: usize) -> Self {
        Self::zeros(rows, 1, false)
    }

    pub fn from_value(value: Matrix, decay: bool) -> Self {
        let grad = Matrix::zeros(value.rows, value.cols);
        Self { value, grad, decay }
    }

    pub fn rows(&self) -> usize {
        self.value.rows
    }

    pub fn cols(&self) -> usize {
        self.value.cols
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.value.data
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Implemented by every parameter group so the optimizer and the gradient
/// checker can walk parameters in a fixed order.
pub trait Parameterized {
    fn params(&self) -> Vec<&ParamMatrix>;
    fn params_mut(&mut self) -> Vec<&mut ParamMatrix>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_scalars(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Flattened copy of all gradients in parameter order.
    fn flat_grad(&self) -> Vec<f64> {
        self.params()
            .iter()
            .flat_map(|p| p.grad.data.iter().copied())
            .collect()
    }

    /// Flattened copy of all values in parameter order.
    fn flat_values(&self) -> Vec<f64> {
        self.params()
            .iter()
            .flat_map(|p| p.value.data.iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fan_in_init_respects_its_bound() {
        let mut rng = Rng::new(5);
        let p = ParamMatrix::uniform_fan_in(20, 3, 16, &mut rng);
        assert!(p.value.data.iter().all(|v| v.abs() <= 0.25));
        // The bound comes from `fan_in`, not from the block's width.
        assert!(p.value.data.iter().any(|v| v.abs() > 0.2));
        assert!(p.decay);
        let q = ParamMatrix::uniform(20, 4, &mut Rng::new(5));
        assert!(q.value.data.iter().all(|v| v.abs() <= 0.5));
        assert!(q.value.data.iter().any(|v| v.abs() > 0.4));
    }

    #[test]
    fn outer_and_transpose_products_agree() {
        let m = Matrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut y = [0.0; 2];
        m.mul_vec_acc(&[1.0, 0.0, -1.0], &mut y);
        assert_eq!(y, [-2.0, -2.0]);
        let mut x = [0.0; 3];
        m.mul_t_vec_acc(&[1.0, 1.0], &mut x);
        assert_eq!(x, [5.0, 7.0, 9.0]);
        let mut g = Matrix::zeros(2, 3);
        g.add_outer(&[1.0, 2.0], &[1.0, 0.0, 3.0], 0.5);
        assert_eq!(g.data, vec![0.5, 0.0, 1.5, 1.0, 0.0, 3.0]);
    }

    #[test]
    fn uniform_init_respects_fan_in_bound() {
        let mut rng = Rng::new(3);
        let p = ParamMatrix::uniform(8, 16, &mut rng);
        assert!(p.values().iter().all(|v| v.abs() <= 0.25));
        assert!(p.decay);
        assert!(!ParamMatrix::bias(4).decay);
    }

    #[test]
    fn malformed_matrix_is_rejected() {
        assert!(Matrix::from_rows(2, 2, vec![1.0; 3]).is_err());
    }
}
