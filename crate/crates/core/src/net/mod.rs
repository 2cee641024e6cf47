//! The two-layer triplet network: `W2 · dropout(tanh(W1·x + b1)) + b2`,
//! trained on the clamped triplet loss under cosine distance with
//! hand-derived gradients.

mod adam;
mod gradcheck;
mod triplet;
mod xent;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Draw;

pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use gradcheck::{compare_gradients, grad_check, gradcheck_suite, GradCheckReport};
pub use triplet::{
    backward, embed_eval, forward, loss_and_grad, DropoutMask, Mode, TripletFeatures,
    TripletMasks,
};
pub use xent::{xent_forward_backward, xent_logits, XentHeadParams};

pub const DEFAULT_HIDDEN: usize = 200;
pub const DEFAULT_EMBED: usize = 40;
pub const DEFAULT_DROPOUT: f64 = 0.4;
pub const DEFAULT_MARGIN: f64 = 0.4;
pub const DEFAULT_LR: f64 = 2e-5;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Anything made of flat `f64` tensors that an optimizer can walk.
pub trait Tensors {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}

/// Weights and biases of both layers. Also used for gradients and moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl Weights {
    pub fn zeros(input: usize, hidden: usize, embed: usize) -> Self {
        Weights {
            w1: Matrix::zeros(hidden, input),
            b1: vec![0.0; hidden],
            w2: Matrix::zeros(embed, hidden),
            b2: vec![0.0; embed],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Weights::zeros(self.input_dim(), self.hidden_dim(), self.embed_dim())
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows
    }

    pub fn embed_dim(&self) -> usize {
        self.w2.rows
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` per layer, zero biases.
    pub fn glorot<D: Draw + ?Sized>(input: usize, hidden: usize, embed: usize, rng: &mut D) -> Self {
        let mut w = Weights::zeros(input, hidden, embed);
        let l1 = (6.0 / (input + hidden) as f64).sqrt();
        let l2 = (6.0 / (hidden + embed) as f64).sqrt();
        w.w1.data.iter_mut().for_each(|x| *x = (2.0 * rng.unit() - 1.0) * l1);
        w.w2.data.iter_mut().for_each(|x| *x = (2.0 * rng.unit() - 1.0) * l2);
        w
    }

    pub fn scale(&mut self, k: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn add_assign(&mut self, other: &Weights) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub(crate) fn flat_get(&self, mut i: usize) -> f64 {
        for s in self.slices() {
            if i < s.len() {
                return s[i];
            }
            i -= s.len();
        }
        panic!("flat index out of range");
    }

    pub(crate) fn flat_set(&mut self, mut i: usize, v: f64) {
        for s in self.slices_mut() {
            if i < s.len() {
                s[i] = v;
                return;
            }
            i -= s.len();
        }
        panic!("flat index out of range");
    }
}

impl Tensors for Weights {
    fn slices(&self) -> Vec<&[f64]> {
        vec![&self.w1.data, &self.b1, &self.w2.data, &self.b2]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w1.data, &mut self.b1, &mut self.w2.data, &mut self.b2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletNetParams {
    pub weights: Weights,
    pub dropout_p: f64,
}

impl TripletNetParams {
    pub fn new(weights: Weights, dropout_p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout_p) {
            return Err(Error::invalid(format!("dropout {dropout_p} not in [0, 1)")));
        }
        if weights.b1.len() != weights.hidden_dim()
            || weights.w2.cols != weights.hidden_dim()
            || weights.b2.len() != weights.embed_dim()
        {
            return Err(Error::invalid("inconsistent layer shapes"));
        }
        if !weights.all_finite() {
            return Err(Error::NonFinite("network weights".into()));
        }
        Ok(TripletNetParams { weights, dropout_p })
    }

    pub fn init<D: Draw + ?Sized>(
        input: usize,
        hidden: usize,
        embed: usize,
        dropout_p: f64,
        rng: &mut D,
    ) -> Result<Self> {
        TripletNetParams::new(Weights::glorot(input, hidden, embed, rng), dropout_p)
    }
}

/// Triplet margin, non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Margin(f64);

impl Margin {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha >= 0.0 && alpha.is_finite() {
            Ok(Margin(alpha))
        } else {
            Err(Error::invalid(format!("margin {alpha} must be a finite non-negative number")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Margin {
    fn default() -> Self {
        Margin(DEFAULT_MARGIN)
    }
}

impl TryFrom<f64> for Margin {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Margin::new(v)
    }
}

impl From<Margin> for f64 {
    fn from(m: Margin) -> f64 {
        m.0
    }
}

const NORM_FLOOR: f64 = 1e-12;

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `1 - cos(u, v)`; 1 when either vector has (near) zero norm.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu < NORM_FLOOR || nv < NORM_FLOOR {
        return 1.0;
    }
    1.0 - dot(u, v) / (nu * nv)
}

/// Distance plus its gradients with respect to `u` and `v`.
pub(crate) fn cosine_distance_grad(u: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu < NORM_FLOOR || nv < NORM_FLOOR {
        return (1.0, vec![0.0; u.len()], vec![0.0; v.len()]);
    }
    let inv = 1.0 / (nu * nv);
    let s = dot(u, v) * inv;
    let du = u
        .iter()
        .zip(v)
        .map(|(a, b)| -(b * inv - s * a / (nu * nu)))
        .collect();
    let dv = u
        .iter()
        .zip(v)
        .map(|(a, b)| -(a * inv - s * b / (nv * nv)))
        .collect();
    (1.0 - s, du, dv)
}

/// `max(0, d_ap - d_an + α)`.
pub fn hinge(d_ap: f64, d_an: f64, margin: Margin) -> f64 {
    (d_ap - d_an + margin.value()).max(0.0)
}

/// Triplet loss of one (anchor, positive, negative) embedding triple.
pub fn triplet_loss(e_a: &[f64], e_p: &[f64], e_n: &[f64], margin: Margin) -> Result<f64> {
    if e_a.len() != e_p.len() || e_a.len() != e_n.len() {
        return Err(Error::DimensionMismatch {
            expected: e_a.len(),
            actual: if e_p.len() != e_a.len() { e_p.len() } else { e_n.len() },
        });
    }
    Ok(hinge(cosine_distance(e_a, e_p), cosine_distance(e_a, e_n), margin))
}
