use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Draw;

use super::{Matrix, Tensors};

/// Linear softmax classifier over frozen features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XentHeadParams {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl XentHeadParams {
    pub fn zeros(classes: usize, input: usize) -> Self {
        XentHeadParams {
            w: Matrix::zeros(classes, input),
            b: vec![0.0; classes],
        }
    }

    pub fn glorot<D: Draw + ?Sized>(classes: usize, input: usize, rng: &mut D) -> Self {
        let mut h = XentHeadParams::zeros(classes, input);
        let lim = (6.0 / (classes + input) as f64).sqrt();
        h.w.data.iter_mut().for_each(|x| *x = (2.0 * rng.unit() - 1.0) * lim);
        h
    }

    pub fn classes(&self) -> usize {
        self.w.rows
    }

    pub fn zeros_like(&self) -> Self {
        XentHeadParams::zeros(self.w.rows, self.w.cols)
    }

    pub fn add_assign(&mut self, other: &XentHeadParams) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x *= k);
        }
    }
}

impl Tensors for XentHeadParams {
    fn slices(&self) -> Vec<&[f64]> {
        vec![&self.w.data, &self.b]
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w.data, &mut self.b]
    }
}

pub fn xent_logits(head: &XentHeadParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != head.w.cols {
        return Err(Error::DimensionMismatch {
            expected: head.w.cols,
            actual: x.len(),
        });
    }
    Ok((0..head.classes())
        .map(|k| head.b[k] + head.w.row(k).iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect())
}

/// Softmax cross-entropy of `W·x + b` against `class_id`, with gradients.
pub fn xent_forward_backward(
    head: &XentHeadParams,
    x: &[f64],
    class_id: usize,
) -> Result<(f64, XentHeadParams)> {
    if class_id >= head.classes() {
        return Err(Error::invalid(format!(
            "class {class_id} out of range for {} classes",
            head.classes()
        )));
    }
    let logits = xent_logits(head, x)?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + max - logits[class_id];
    let mut grads = head.zeros_like();
    for k in 0..head.classes() {
        let dz = exps[k] / sum - if k == class_id { 1.0 } else { 0.0 };
        grads.b[k] = dz;
        for (g, xv) in grads.w.row_mut(k).iter_mut().zip(x) {
            *g = dz * xv;
        }
    }
    Ok((loss, grads))
}
