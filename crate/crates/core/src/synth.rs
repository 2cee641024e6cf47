//! Synthetic highly multiclass corpus with a matching synonym lexicon.
//!
//! Each class owns a few concepts; every concept has several interchangeable
//! surface forms. Sentences mix class concepts, concepts shared by all
//! classes and noise words. Training sentences only use the first
//! `train_forms` forms of each concept; validation and test sentences
//! sometimes use the others, which only the lexicon connects to the
//! training forms. The lexicon is imperfect: class forms also list generic
//! words and, occasionally, forms belonging to another class.

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, SynonymLexicon, TokenizedExample};
use crate::error::{Error, Result};
use crate::rng::{self, choose_distinct, Draw, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: usize,
    pub concepts_per_class: usize,
    pub shared_concepts: usize,
    pub forms_per_concept: usize,
    pub train_forms: usize,
    pub noise_vocab: usize,
    /// Inclusive ranges of tokens per sentence.
    pub class_tokens: (usize, usize),
    pub shared_tokens: (usize, usize),
    pub noise_tokens: (usize, usize),
    /// Chance that a surface form also lists a form of another class's
    /// concept as a synonym.
    pub ambiguity: f64,
    /// Forms of shared concepts listed as synonyms of every class form, so
    /// substitution can wash out class evidence.
    pub generic_synonyms: usize,
    /// Chance that a validation or test class token uses a form never seen
    /// in training.
    pub novel_form_rate: f64,
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 25,
            concepts_per_class: 5,
            shared_concepts: 30,
            forms_per_concept: 4,
            train_forms: 1,
            noise_vocab: 100,
            class_tokens: (4, 7),
            shared_tokens: (1, 2),
            noise_tokens: (1, 4),
            ambiguity: 0.1,
            generic_synonyms: 2,
            novel_form_rate: 0.3,
            train_per_class: 20,
            val_per_class: 10,
            test_per_class: 40,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let ranges = [self.class_tokens, self.shared_tokens, self.noise_tokens];
        if self.classes < 2
            || self.concepts_per_class == 0
            || self.forms_per_concept < 2
            || self.train_forms == 0
            || self.train_forms > self.forms_per_concept
            || ranges.iter().any(|(lo, hi)| lo > hi)
            || self.class_tokens.0 == 0
            || (self.shared_concepts == 0 && self.shared_tokens.1 > 0)
            || (self.noise_vocab == 0 && self.noise_tokens.1 > 0)
            || !(0.0..=1.0).contains(&self.ambiguity)
            || !(0.0..=1.0).contains(&self.novel_form_rate)
            || (self.shared_concepts == 0 && self.generic_synonyms > 0)
        {
            return Err(Error::Config(format!("invalid synthetic corpus settings: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub lexicon: SynonymLexicon,
}

fn class_form(class: usize, concept: usize, form: usize) -> String {
    format!("k{class}c{concept}f{form}")
}

fn shared_form(concept: usize, form: usize) -> String {
    format!("s{concept}f{form}")
}

fn in_range<D: Draw + ?Sized>((lo, hi): (usize, usize), rng: &mut D) -> usize {
    lo + rng.below(hi - lo + 1)
}

/// Surface form index; `novel` is the chance of leaving the training forms.
fn form<D: Draw + ?Sized>(cfg: &SynthConfig, novel: f64, rng: &mut D) -> usize {
    let seen = cfg.train_forms;
    if seen < cfg.forms_per_concept && rng.unit() < novel {
        seen + rng.below(cfg.forms_per_concept - seen)
    } else {
        rng.below(seen)
    }
}

fn sentence<D: Draw + ?Sized>(cfg: &SynthConfig, class: usize, novel: f64, rng: &mut D) -> Vec<String> {
    let mut tokens = Vec::new();
    for _ in 0..in_range(cfg.class_tokens, rng) {
        let c = rng.below(cfg.concepts_per_class);
        tokens.push(class_form(class, c, form(cfg, novel, rng)));
    }
    for _ in 0..in_range(cfg.shared_tokens, rng) {
        let c = rng.below(cfg.shared_concepts);
        tokens.push(shared_form(c, form(cfg, novel, rng)));
    }
    for _ in 0..in_range(cfg.noise_tokens, rng) {
        tokens.push(format!("n{}", rng.below(cfg.noise_vocab)));
    }
    let n = tokens.len();
    choose_distinct(rng, n, n).into_iter().map(|i| tokens[i].clone()).collect()
}

fn lexicon(cfg: &SynthConfig, seed: u64) -> SynonymLexicon {
    let mut rng = rng::stream(seed, Purpose::Synth, 0);
    let f = cfg.forms_per_concept;
    let mut groups: Vec<Vec<String>> = Vec::new();
    for k in 0..cfg.classes {
        for c in 0..cfg.concepts_per_class {
            groups.push((0..f).map(|m| class_form(k, c, m)).collect());
        }
    }
    let class_groups = groups.len();
    groups.extend((0..cfg.shared_concepts).map(|c| (0..f).map(|m| shared_form(c, m)).collect::<Vec<_>>()));
    let per_class = cfg.concepts_per_class;
    let mut entries = Vec::new();
    for (g, forms) in groups.iter().enumerate() {
        for w in forms {
            let mut syns: Vec<String> = forms.iter().filter(|s| *s != w).cloned().collect();
            if g < class_groups && rng.unit() < cfg.ambiguity {
                let other = (g / per_class + 1 + rng.below(cfg.classes - 1)) % cfg.classes;
                let c = rng.below(per_class);
                syns.push(groups[other * per_class + c][rng.below(f)].clone());
            }
            if g < class_groups {
                for _ in 0..cfg.generic_synonyms {
                    syns.push(shared_form(rng.below(cfg.shared_concepts), rng.below(f)));
                }
            }
            entries.push((w.clone(), syns));
        }
    }
    SynonymLexicon::from_entries(entries)
}

/// Generates train, validation and test pools plus the lexicon.
pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<SynthCorpus> {
    cfg.validate()?;
    let names: Vec<String> = (0..cfg.classes).map(|k| format!("class{k:03}")).collect();
    let split = |id: u64, per_class: usize, novel: f64| {
        let mut rng = rng::stream(seed, Purpose::Synth, id);
        let examples = (0..cfg.classes)
            .flat_map(|k| (0..per_class).map(move |_| k))
            .map(|k| TokenizedExample::original(sentence(cfg, k, novel, &mut rng), k))
            .collect();
        Dataset::new(examples, names.clone())
    };
    Ok(SynthCorpus {
        train: split(1, cfg.train_per_class, 0.0)?,
        val: split(2, cfg.val_per_class, cfg.novel_form_rate)?,
        test: split(3, cfg.test_per_class, cfg.novel_form_rate)?,
        lexicon: lexicon(cfg, seed),
    })
}
