//! Curriculum data augmentation for few-shot, highly multiclass text
//! classification with triplet networks.
//!
//! The crate is organized bottom-up:
//!
//! * [`corpus`]: JSON Lines datasets, tokenization, per-class sampling,
//!   synonym lexicons and vocabularies.
//! * [`augment`]: temperature-controlled token operators (EDA and its four
//!   components, token substitution, pervasive dropout, SwitchOut,
//!   round-trip translation).
//! * [`encoder`]: frozen text encoders (hashed n-grams, averaged embeddings).
//! * [`net`]: the two-layer triplet network, cosine triplet loss, Adam,
//!   gradient checking and the cross-entropy baseline head.
//! * [`mining`]: random and hard-negative triplet sampling.
//! * [`curriculum`]: training schedules and batch composition.
//! * [`synth`]: a generated few-shot corpus with a synonym lexicon.
//! * [`trainer`]: the training loop, 1-NN evaluation, checkpoints and the
//!   experiment grid runner.

pub mod augment;
pub mod corpus;
pub mod curriculum;
pub mod encoder;
pub mod error;
pub mod mining;
pub mod net;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
