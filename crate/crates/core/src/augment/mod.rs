//! Token-level augmentation operators driven by a temperature, the fraction
//! of tokens an operator perturbs.

mod ops;
mod translate;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Origin, SynonymLexicon, TokenizedExample, Vocabulary};
use crate::error::{Error, Result};
use crate::rng::Draw;

pub use ops::{
    apply_eda_op, eda, pervasive_dropout, pick_eda_op, random_deletion, random_insertion,
    random_swap, switchout, synonym_replacement, token_substitution, EDA_OPS,
};
pub use translate::{
    round_trip_translate, HttpJsonTransport, StubTransport, TranslationClient,
    TranslationTransport,
};

/// Fraction of perturbed tokens, in `[0, 1]`. Zero is the identity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub const ZERO: Temperature = Temperature(0.0);

    pub fn new(tau: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&tau) {
            Ok(Temperature(tau))
        } else {
            Err(Error::invalid(format!("temperature {tau} not in [0, 1]")))
        }
    }

    /// `tenths / 10`, the grid the curricula step through.
    pub fn tenths(tenths: u32) -> Result<Self> {
        Temperature::new(f64::from(tenths) / 10.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Temperature::new(v)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Number of positions a count-based operator perturbs: zero at `τ = 0`,
/// otherwise `max(1, round(τ·len))` with halves rounded away from zero.
pub fn num_perturbed(tau: Temperature, len: usize) -> usize {
    if tau.is_zero() {
        return 0;
    }
    ((tau.value() * len as f64).round() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentOpKind {
    Eda,
    SynonymReplacement,
    RandomInsertion,
    RandomSwap,
    RandomDeletion,
    TokenSubstitution,
    PervasiveDropout,
    Switchout,
    RoundTripTranslation,
}

impl AugmentOpKind {
    pub const ALL: [AugmentOpKind; 9] = [
        AugmentOpKind::Eda,
        AugmentOpKind::SynonymReplacement,
        AugmentOpKind::RandomInsertion,
        AugmentOpKind::RandomSwap,
        AugmentOpKind::RandomDeletion,
        AugmentOpKind::TokenSubstitution,
        AugmentOpKind::PervasiveDropout,
        AugmentOpKind::Switchout,
        AugmentOpKind::RoundTripTranslation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugmentOpKind::Eda => "eda",
            AugmentOpKind::SynonymReplacement => "synonym_replacement",
            AugmentOpKind::RandomInsertion => "random_insertion",
            AugmentOpKind::RandomSwap => "random_swap",
            AugmentOpKind::RandomDeletion => "random_deletion",
            AugmentOpKind::TokenSubstitution => "token_substitution",
            AugmentOpKind::PervasiveDropout => "pervasive_dropout",
            AugmentOpKind::Switchout => "switchout",
            AugmentOpKind::RoundTripTranslation => "round_trip_translation",
        }
    }
}

impl fmt::Display for AugmentOpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AugmentOpKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AugmentOpKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown augmentation technique {s:?}")))
    }
}

/// Default word-dropout probability for pervasive dropout.
pub const DEFAULT_DROPOUT_P: f64 = 0.1;

/// A configured augmentation technique with the tables it needs.
#[derive(Clone)]
pub struct Augmenter {
    technique: AugmentOpKind,
    lexicon: Arc<SynonymLexicon>,
    vocab: Arc<Vocabulary>,
    dropout_p: f64,
    translator: Option<Arc<TranslationClient>>,
}

impl fmt::Debug for Augmenter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Augmenter")
            .field("technique", &self.technique)
            .field("lexicon_entries", &self.lexicon.len())
            .field("vocab_size", &self.vocab.len())
            .field("dropout_p", &self.dropout_p)
            .finish()
    }
}

impl Augmenter {
    pub fn new(technique: AugmentOpKind, lexicon: Arc<SynonymLexicon>, vocab: Arc<Vocabulary>) -> Result<Self> {
        if technique == AugmentOpKind::Switchout && vocab.is_empty() {
            return Err(Error::invalid("switchout needs a non-empty vocabulary"));
        }
        Ok(Augmenter {
            technique,
            lexicon,
            vocab,
            dropout_p: DEFAULT_DROPOUT_P,
            translator: None,
        })
    }

    pub fn with_dropout_p(mut self, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::invalid(format!("dropout probability {p} not in [0, 1)")));
        }
        self.dropout_p = p;
        Ok(self)
    }

    /// Round-trip translation without a client uses the identity stub.
    pub fn with_translator(mut self, client: Arc<TranslationClient>) -> Self {
        self.translator = Some(client);
        self
    }

    pub fn technique(&self) -> AugmentOpKind {
        self.technique
    }

    /// Applies the technique at temperature `tau`. Labels are never touched.
    pub fn augment<D: Draw + ?Sized>(
        &self,
        ex: &TokenizedExample,
        tau: Temperature,
        rng: &mut D,
    ) -> TokenizedExample {
        let tokens = self.augment_tokens(&ex.tokens, tau, rng);
        let origin = match tokens {
            Some(_) => Origin::Augmented {
                op: self.technique,
                tau: tau.value(),
            },
            None => ex.origin,
        };
        TokenizedExample {
            tokens: tokens.unwrap_or_else(|| ex.tokens.clone()),
            class_id: ex.class_id,
            origin,
        }
    }

    /// `None` when the technique failed and the input passes through.
    fn augment_tokens<D: Draw + ?Sized>(
        &self,
        tokens: &[String],
        tau: Temperature,
        rng: &mut D,
    ) -> Option<Vec<String>> {
        if tau.is_zero() {
            return Some(tokens.to_vec());
        }
        let n = num_perturbed(tau, tokens.len());
        let lex = &*self.lexicon;
        Some(match self.technique {
            AugmentOpKind::Eda => eda(tokens, tau, lex, rng),
            AugmentOpKind::SynonymReplacement | AugmentOpKind::TokenSubstitution => {
                synonym_replacement(tokens, n, lex, rng)
            }
            AugmentOpKind::RandomInsertion => random_insertion(tokens, n, lex, rng),
            AugmentOpKind::RandomSwap => random_swap(tokens, n, rng),
            AugmentOpKind::RandomDeletion => random_deletion(tokens, tau, rng),
            AugmentOpKind::PervasiveDropout => pervasive_dropout(tokens, self.dropout_p, rng)
                .expect("dropout probability validated at construction"),
            AugmentOpKind::Switchout => {
                switchout(tokens, tau, &self.vocab, rng).expect("vocabulary validated at construction")
            }
            AugmentOpKind::RoundTripTranslation => {
                let stub;
                let client = match &self.translator {
                    Some(c) => &**c,
                    None => {
                        stub = TranslationClient::stub();
                        &stub
                    }
                };
                let text = tokens.join(" ");
                match round_trip_translate(&text, client).and_then(|t| corpus::tokenize(&t)) {
                    Ok(t) => t,
                    Err(e) => {
                        warn!("round-trip translation failed, keeping original: {e}");
                        return None;
                    }
                }
            }
        })
    }
}
