use crate::error::Result;
use crate::rng::{self, choose_distinct, Draw, Purpose};

use super::triplet::batch_loss;
use super::{
    loss_and_grad, DropoutMask, Margin, Tensors, TripletFeatures, TripletMasks,
    TripletNetParams, Weights,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_checked: usize,
}

/// Max of `|g_a - g_fd| / max(|g_a|, |g_fd|, 1e-10)` over `coords`, with
/// `g_fd` the central difference of `loss` at `at`.
pub fn compare_gradients(
    analytic: &Weights,
    at: &Weights,
    loss: impl Fn(&Weights) -> f64,
    step: f64,
    coords: &[usize],
) -> f64 {
    let mut probe = at.clone();
    let mut worst = 0.0f64;
    for &i in coords {
        let x = at.flat_get(i);
        probe.flat_set(i, x + step);
        let up = loss(&probe);
        probe.flat_set(i, x - step);
        let down = loss(&probe);
        probe.flat_set(i, x);
        let fd = (up - down) / (2.0 * step);
        let ga = analytic.flat_get(i);
        let rel = (ga - fd).abs() / ga.abs().max(fd.abs()).max(1e-10);
        worst = worst.max(rel);
    }
    worst
}

/// Checks [`loss_and_grad`] against central differences, on every
/// coordinate or on `sample` random ones.
pub fn grad_check(
    params: &TripletNetParams,
    batch: &[TripletFeatures<'_>],
    margin: Margin,
    masks: Option<&[TripletMasks]>,
    step: f64,
    sample: Option<(usize, &mut dyn Draw)>,
) -> Result<GradCheckReport> {
    let (_, grads) = loss_and_grad(params, batch, margin, masks)?;
    let n = params.weights.num_params();
    let coords: Vec<usize> = match sample {
        Some((k, rng)) if k < n => choose_distinct(rng, n, k),
        _ => (0..n).collect(),
    };
    let max_rel_error = compare_gradients(
        &grads,
        &params.weights,
        |w| batch_loss(w, batch, margin, masks),
        step,
        &coords,
    );
    Ok(GradCheckReport {
        max_rel_error,
        coords_checked: coords.len(),
    })
}

/// Runs [`grad_check`] on `configs` random small networks and batches
/// (dense inputs, dropout masks active, step 1e-5).
pub fn gradcheck_suite(seed: u64, configs: usize) -> Result<Vec<GradCheckReport>> {
    (0..configs)
        .map(|k| {
            let mut rng = rng::stream(seed, Purpose::GradCheck, k as u64);
            let d = 4 + rng.below(9);
            let h1 = 3 + rng.below(8);
            let h2 = 2 + rng.below(5);
            let batch_len = 1 + rng.below(6);
            let mut w = Weights::glorot(d, h1, h2, &mut rng);
            w.b1.iter_mut().for_each(|b| *b = rng.unit() - 0.5);
            w.b2.iter_mut().for_each(|b| *b = rng.unit() - 0.5);
            let params = TripletNetParams::new(w, 0.4)?;
            let feats: Vec<Vec<f64>> = (0..3 * batch_len)
                .map(|_| (0..d).map(|_| 2.0 * rng.unit() - 1.0).collect())
                .collect();
            let batch: Vec<TripletFeatures<'_>> = feats
                .chunks(3)
                .map(|c| [c[0].as_slice(), c[1].as_slice(), c[2].as_slice()])
                .collect();
            let masks: Vec<TripletMasks> = (0..batch_len)
                .map(|_| {
                    [0, 1, 2].map(|_| Some(DropoutMask::sample(h1, params.dropout_p, &mut rng)))
                })
                .collect();
            grad_check(&params, &batch, Margin::default(), Some(&masks), 1e-5, None)
        })
        .collect()
}
