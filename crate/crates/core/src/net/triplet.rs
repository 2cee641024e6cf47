use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Draw;

use super::{cosine_distance, cosine_distance_grad, Margin, TripletNetParams, Weights};

/// Inverted-dropout scale per hidden unit: 0 for dropped units,
/// `1 / (1 - p)` for kept ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropoutMask(pub Vec<f64>);

impl DropoutMask {
    pub fn sample<D: Draw + ?Sized>(hidden: usize, p: f64, rng: &mut D) -> Self {
        let keep = 1.0 / (1.0 - p);
        DropoutMask(
            (0..hidden)
                .map(|_| if rng.unit() < p { 0.0 } else { keep })
                .collect(),
        )
    }
}

/// Masks for the anchor, positive and negative passes of one triplet.
/// `None` runs that pass without dropout.
pub type TripletMasks = [Option<DropoutMask>; 3];

/// Feature vectors of one (anchor, positive, negative) triple.
pub type TripletFeatures<'a> = [&'a [f64]; 3];

pub enum Mode<'a> {
    Train(&'a mut dyn Draw),
    Eval,
}

struct Pass {
    nz: Vec<usize>,
    hidden: Vec<f64>,
    dropped: Vec<f64>,
    out: Vec<f64>,
}

fn check_dim(w: &Weights, x: &[f64]) -> Result<()> {
    if x.len() != w.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: w.input_dim(),
            actual: x.len(),
        });
    }
    Ok(())
}

// Hashed features are sparse, so the first layer only visits non-zeros.
fn run(w: &Weights, x: &[f64], mask: Option<&DropoutMask>) -> Pass {
    let nz: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    let hidden: Vec<f64> = (0..w.hidden_dim())
        .map(|i| {
            let row = w.w1.row(i);
            let z = w.b1[i] + nz.iter().map(|&j| row[j] * x[j]).sum::<f64>();
            z.tanh()
        })
        .collect();
    let dropped: Vec<f64> = match mask {
        Some(m) => hidden.iter().zip(&m.0).map(|(h, k)| h * k).collect(),
        None => hidden.clone(),
    };
    let out = (0..w.embed_dim())
        .map(|k| {
            w.b2[k]
                + w.w2
                    .row(k)
                    .iter()
                    .zip(&dropped)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect();
    Pass {
        nz,
        hidden,
        dropped,
        out,
    }
}

// Accumulates the parameter gradient of one pass given dL/d(out).
fn accumulate(
    w: &Weights,
    x: &[f64],
    pass: &Pass,
    mask: Option<&DropoutMask>,
    d_out: &[f64],
    grads: &mut Weights,
) {
    let h1 = w.hidden_dim();
    let mut d_hidden = vec![0.0; h1];
    for (k, &g) in d_out.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grads.b2[k] += g;
        let grow = grads.w2.row_mut(k);
        for (gw, hd) in grow.iter_mut().zip(&pass.dropped) {
            *gw += g * hd;
        }
        for (dh, wv) in d_hidden.iter_mut().zip(w.w2.row(k)) {
            *dh += g * wv;
        }
    }
    for i in 0..h1 {
        let mut dz = d_hidden[i] * (1.0 - pass.hidden[i] * pass.hidden[i]);
        if let Some(m) = mask {
            dz *= m.0[i];
        }
        if dz == 0.0 {
            continue;
        }
        grads.b1[i] += dz;
        let grow = grads.w1.row_mut(i);
        for &j in &pass.nz {
            grow[j] += dz * x[j];
        }
    }
}

/// Embeds `x`. Train mode samples a fresh dropout mask from the given
/// source; eval mode is deterministic.
pub fn forward(params: &TripletNetParams, x: &[f64], mode: Mode<'_>) -> Result<Vec<f64>> {
    check_dim(&params.weights, x)?;
    let mask = match mode {
        Mode::Train(rng) if params.dropout_p > 0.0 => Some(DropoutMask::sample(
            params.weights.hidden_dim(),
            params.dropout_p,
            rng,
        )),
        _ => None,
    };
    Ok(run(&params.weights, x, mask.as_ref()).out)
}

/// Eval-mode embedding.
pub fn embed_eval(params: &TripletNetParams, x: &[f64]) -> Result<Vec<f64>> {
    forward(params, x, Mode::Eval)
}

/// Mean clamped triplet loss of a batch and its exact gradient.
///
/// `masks`, when given, holds one entry per triplet and is reused for the
/// backward pass. Triplets at or inside the margin contribute nothing.
pub fn loss_and_grad(
    params: &TripletNetParams,
    batch: &[TripletFeatures<'_>],
    margin: Margin,
    masks: Option<&[TripletMasks]>,
) -> Result<(f64, Weights)> {
    let w = &params.weights;
    let mut grads = w.zeros_like();
    if batch.is_empty() {
        return Ok((0.0, grads));
    }
    if let Some(m) = masks {
        if m.len() != batch.len() {
            return Err(Error::DimensionMismatch {
                expected: batch.len(),
                actual: m.len(),
            });
        }
    }
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for (t, xs) in batch.iter().enumerate() {
        for x in xs {
            check_dim(w, x)?;
        }
        let mask = |k: usize| masks.and_then(|m| m[t][k].as_ref());
        let passes: Vec<Pass> = (0..3).map(|k| run(w, xs[k], mask(k))).collect();
        let (d_ap, ga_p, gp) = cosine_distance_grad(&passes[0].out, &passes[1].out);
        let (d_an, ga_n, gn) = cosine_distance_grad(&passes[0].out, &passes[2].out);
        let raw = d_ap - d_an + margin.value();
        if raw <= 0.0 {
            continue;
        }
        total += raw;
        let d_a: Vec<f64> = ga_p.iter().zip(&ga_n).map(|(p, n)| (p - n) * scale).collect();
        let d_p: Vec<f64> = gp.iter().map(|g| g * scale).collect();
        let d_n: Vec<f64> = gn.iter().map(|g| -g * scale).collect();
        accumulate(w, xs[0], &passes[0], mask(0), &d_a, &mut grads);
        accumulate(w, xs[1], &passes[1], mask(1), &d_p, &mut grads);
        accumulate(w, xs[2], &passes[2], mask(2), &d_n, &mut grads);
    }
    Ok((total * scale, grads))
}

/// Gradient only; see [`loss_and_grad`].
pub fn backward(
    params: &TripletNetParams,
    batch: &[TripletFeatures<'_>],
    margin: Margin,
    masks: Option<&[TripletMasks]>,
) -> Result<Weights> {
    loss_and_grad(params, batch, margin, masks).map(|(_, g)| g)
}

/// Mean clamped loss with fixed masks, no gradient.
pub(crate) fn batch_loss(
    weights: &Weights,
    batch: &[TripletFeatures<'_>],
    margin: Margin,
    masks: Option<&[TripletMasks]>,
) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (t, xs) in batch.iter().enumerate() {
        let mask = |k: usize| masks.and_then(|m| m[t][k].as_ref());
        let a = run(weights, xs[0], mask(0)).out;
        let p = run(weights, xs[1], mask(1)).out;
        let n = run(weights, xs[2], mask(2)).out;
        total += (cosine_distance(&a, &p) - cosine_distance(&a, &n) + margin.value()).max(0.0);
    }
    total / batch.len() as f64
}
