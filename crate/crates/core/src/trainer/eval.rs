use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::net::{cosine_distance, embed_eval, xent_logits, TripletNetParams, XentHeadParams};

/// Encoded examples with their labels. `augmented[i]` marks rows that came
/// from an augmentation operator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledFeatures {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub augmented: Vec<bool>,
}

impl LabeledFeatures {
    pub fn originals(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: features.len(),
            });
        }
        let augmented = vec![false; labels.len()];
        Ok(LabeledFeatures {
            features,
            labels,
            augmented,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Index of the reference closest to `query`, ties to the lowest index.
pub fn nearest_index(references: &[Vec<f64>], query: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, r) in references.iter().enumerate() {
        let d = cosine_distance(r, query);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

pub(crate) fn embed_all(params: &TripletNetParams, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    features.par_iter().map(|x| embed_eval(params, x)).collect()
}

/// Predicted class of every row of `eval` by 1-NN over `train`
/// embeddings.
pub fn nearest_neighbor_predict(
    params: &TripletNetParams,
    train: &LabeledFeatures,
    eval: &LabeledFeatures,
) -> Result<Vec<usize>> {
    if train.augmented.iter().any(|&a| a) {
        return Err(Error::invalid("1-NN references must be original examples"));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let refs = embed_all(params, &train.features)?;
    let queries = embed_all(params, &eval.features)?;
    Ok(queries
        .par_iter()
        .map(|q| train.labels[nearest_index(&refs, q)])
        .collect())
}

/// Top-1 accuracy of 1-NN classification under eval-mode embeddings.
pub fn evaluate_1nn(params: &TripletNetParams, train: &LabeledFeatures, eval: &LabeledFeatures) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pred = nearest_neighbor_predict(params, train, eval)?;
    Ok(accuracy(&pred, &eval.labels))
}

/// Argmax class, ties to the lowest class id.
pub fn xent_predict(head: &XentHeadParams, x: &[f64]) -> Result<usize> {
    let logits = xent_logits(head, x)?;
    let mut best = 0;
    for (k, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = k;
        }
    }
    Ok(best)
}

pub fn evaluate_xent(head: &XentHeadParams, eval: &LabeledFeatures) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pred = eval
        .features
        .par_iter()
        .map(|x| xent_predict(head, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(accuracy(&pred, &eval.labels))
}

fn accuracy(pred: &[usize], gold: &[usize]) -> f64 {
    let correct = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    correct as f64 / gold.len() as f64
}
