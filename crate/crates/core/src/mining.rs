//! Triplet sampling: uniform random triplets and online hard-negative
//! mining against the current network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{cosine_distance, embed_eval, Margin, TripletNetParams};
use crate::rng::Draw;

pub const DEFAULT_MAX_ATTEMPTS: usize = 50;

/// Indices into the current training pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// A hard-mined triplet. `fallback` marks triplets whose negative is the
/// closest candidate seen after every attempt failed the margin test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinedTriplet {
    pub triplet: Triplet,
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Random,
    HardNegative,
}

/// Pool indices grouped by class.
#[derive(Debug, Clone)]
pub struct ClassIndex {
    grouped: Vec<usize>,
    offsets: Vec<usize>,
    classes: Vec<usize>,
}

impl ClassIndex {
    /// Requires at least two classes, each with at least two members.
    pub fn new(labels: &[usize]) -> Result<Self> {
        let c = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); c];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(i);
        }
        let classes: Vec<usize> = (0..c).filter(|&k| !groups[k].is_empty()).collect();
        if classes.len() < 2 {
            return Err(Error::invalid("triplet sampling needs at least two classes"));
        }
        if let Some(&k) = classes.iter().find(|&&k| groups[k].len() < 2) {
            return Err(Error::ClassTooSmall {
                class: k.to_string(),
                available: groups[k].len(),
                required: 2,
            });
        }
        let mut offsets = vec![0; c + 1];
        for k in 0..c {
            offsets[k + 1] = offsets[k] + groups[k].len();
        }
        Ok(ClassIndex {
            grouped: groups.concat(),
            offsets,
            classes,
        })
    }

    fn members(&self, class: usize) -> &[usize] {
        &self.grouped[self.offsets[class]..self.offsets[class + 1]]
    }

    fn anchor_positive<D: Draw + ?Sized>(&self, rng: &mut D) -> (usize, usize) {
        let class = self.classes[rng.below(self.classes.len())];
        let m = self.members(class);
        let a = rng.below(m.len());
        let mut p = rng.below(m.len() - 1);
        if p >= a {
            p += 1;
        }
        (m[a], m[p])
    }

    /// Uniform draw among pool members outside `class`.
    fn other<D: Draw + ?Sized>(&self, class: usize, rng: &mut D) -> usize {
        let (lo, hi) = (self.offsets[class], self.offsets[class + 1]);
        let r = rng.below(self.grouped.len() - (hi - lo));
        if r < lo {
            self.grouped[r]
        } else {
            self.grouped[r + hi - lo]
        }
    }
}

/// Uniform anchor class, anchor and positive drawn without replacement in
/// that class, negative uniform over the other classes.
pub fn sample_random_triplets<D: Draw + ?Sized>(
    labels: &[usize],
    batch_size: usize,
    rng: &mut D,
) -> Result<Vec<Triplet>> {
    let index = ClassIndex::new(labels)?;
    Ok((0..batch_size)
        .map(|_| {
            let (anchor, positive) = index.anchor_positive(rng);
            let negative = index.other(labels[anchor], rng);
            Triplet {
                anchor,
                positive,
                negative,
            }
        })
        .collect())
}

/// Rejection-samples negatives until `d(a,p) + α > d(a,n)` under the given
/// pool embeddings, keeping the closest negative seen if `max_attempts`
/// draws all fail.
pub fn mine_hard_negatives<D: Draw + ?Sized>(
    labels: &[usize],
    embeddings: &[Vec<f64>],
    batch_size: usize,
    margin: Margin,
    max_attempts: usize,
    rng: &mut D,
) -> Result<Vec<MinedTriplet>> {
    if embeddings.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: embeddings.len(),
        });
    }
    let index = ClassIndex::new(labels)?;
    let max_attempts = max_attempts.max(1);
    Ok((0..batch_size)
        .map(|_| {
            let (anchor, positive) = index.anchor_positive(rng);
            let d_ap = cosine_distance(&embeddings[anchor], &embeddings[positive]);
            let mut best = (f64::INFINITY, usize::MAX);
            for _ in 0..max_attempts {
                let n = index.other(labels[anchor], rng);
                let d_an = cosine_distance(&embeddings[anchor], &embeddings[n]);
                if d_ap + margin.value() > d_an {
                    return MinedTriplet {
                        triplet: Triplet {
                            anchor,
                            positive,
                            negative: n,
                        },
                        fallback: false,
                    };
                }
                if d_an < best.0 {
                    best = (d_an, n);
                }
            }
            MinedTriplet {
                triplet: Triplet {
                    anchor,
                    positive,
                    negative: best.1,
                },
                fallback: true,
            }
        })
        .collect())
}

/// Embeds the pool once in eval mode, then mines against it.
pub fn sample_hard_negative_triplets<D: Draw + ?Sized>(
    labels: &[usize],
    features: &[&[f64]],
    batch_size: usize,
    params: &TripletNetParams,
    margin: Margin,
    max_attempts: usize,
    rng: &mut D,
) -> Result<Vec<MinedTriplet>> {
    let embeddings = features
        .iter()
        .map(|x| embed_eval(params, x))
        .collect::<Result<Vec<_>>>()?;
    mine_hard_negatives(labels, &embeddings, batch_size, margin, max_attempts, rng)
}
