use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::augment::TranslationClient;
use crate::corpus::{
    balance_classes, build_vocab, load_dataset, load_lexicon, load_stop_words, split, Dataset, SplitRule,
    SynonymLexicon, Vocabulary,
};
use crate::error::{Error, Result};
use crate::synth::{generate, SynthConfig};

/// Everything the trainer reads besides its config.
#[derive(Clone)]
pub struct TrainingData {
    /// Original training examples, the 1-NN reference pool.
    pub train: Dataset,
    pub val: Option<Dataset>,
    pub test: Option<Dataset>,
    pub lexicon: Arc<SynonymLexicon>,
    pub vocab: Arc<Vocabulary>,
    pub translator: Option<Arc<TranslationClient>>,
}

impl TrainingData {
    /// Aligns evaluation sets to the training classes and derives the
    /// vocabulary from the training set.
    pub fn new(train: Dataset, val: Option<Dataset>, test: Option<Dataset>, lexicon: SynonymLexicon) -> Result<Self> {
        let align = |d: Option<Dataset>| d.map(|d| d.align_to(&train.class_names)).transpose();
        let val = align(val)?;
        let test = align(test)?;
        let vocab = Arc::new(build_vocab(&train)?);
        Ok(TrainingData {
            train,
            val,
            test,
            lexicon: Arc::new(lexicon),
            vocab,
            translator: None,
        })
    }

    pub fn with_translator(mut self, client: Arc<TranslationClient>) -> Self {
        self.translator = Some(client);
        self
    }
}

impl std::fmt::Debug for TrainingData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainingData")
            .field("train", &self.train.len())
            .field("val", &self.val.as_ref().map(Dataset::len))
            .field("test", &self.test.as_ref().map(Dataset::len))
            .field("lexicon", &self.lexicon.len())
            .finish()
    }
}

/// Where data comes from and how the few-shot training set is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stop_words: Option<PathBuf>,
    /// Replaces the file inputs with a generated corpus.
    pub synthetic: Option<SynthConfig>,
    /// Examples per class kept for training; all when unset.
    pub n_c: Option<usize>,
    /// Per-class fraction held out when a split file is missing.
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub translation_url: Option<String>,
    pub translation_pivot: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            train: None,
            val: None,
            test: None,
            lexicon: None,
            stop_words: None,
            synthetic: None,
            n_c: None,
            test_fraction: 0.3,
            val_fraction: 0.2,
            translation_url: None,
            translation_pivot: "de".into(),
        }
    }
}

impl DataConfig {
    /// Resolves relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.train,
            &mut self.val,
            &mut self.test,
            &mut self.lexicon,
            &mut self.stop_words,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Loads or generates the corpus, fills missing splits and draws `n_c`
    /// training examples per class. `seed` drives splitting and sampling.
    pub fn prepare(&self, seed: u64, need_val: bool) -> Result<TrainingData> {
        let (pool, mut val, mut test, mut lexicon) = match &self.synthetic {
            Some(cfg) => {
                let c = generate(cfg, seed)?;
                (c.train, Some(c.val), Some(c.test), c.lexicon)
            }
            None => {
                let train = self
                    .train
                    .as_ref()
                    .ok_or_else(|| Error::Config("data.train is required without data.synthetic".into()))?;
                let lexicon = match &self.lexicon {
                    Some(p) => load_lexicon(p)?,
                    None => SynonymLexicon::default(),
                };
                let load = |p: &Option<PathBuf>| p.as_ref().map(load_dataset).transpose();
                (load_dataset(train)?, load(&self.val)?, load(&self.test)?, lexicon)
            }
        };
        if let Some(p) = &self.stop_words {
            lexicon = lexicon.without_stop_words(&load_stop_words(p)?);
        }
        let mut pool = pool;
        if test.is_none() {
            let (rest, held) = split(&pool, SplitRule::Fraction(self.test_fraction), seed)?;
            pool = rest;
            test = Some(held);
        }
        if val.is_none() && need_val {
            let (rest, held) = split(&pool, SplitRule::Fraction(self.val_fraction), seed ^ 0x5a5a)?;
            pool = rest;
            val = Some(held);
        }
        let train = match self.n_c {
            Some(n_c) => balance_classes(&pool, n_c, seed)?,
            None => pool,
        };
        let data = TrainingData::new(train, val, test, lexicon)?;
        Ok(match &self.translation_url {
            Some(url) => data.with_translator(Arc::new(TranslationClient::http(url.clone(), self.translation_pivot.clone()))),
            None => data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn synthetic_with_n_c() {
        let cfg = DataConfig {
            synthetic: Some(SynthConfig {
                classes: 4,
                ..SynthConfig::default()
            }),
            n_c: Some(3),
            ..DataConfig::default()
        };
        let d = cfg.prepare(1, true).unwrap();
        assert_eq!(d.train.len(), 12);
        assert!(d.train.by_class().iter().all(|g| g.len() == 3));
        assert!(d.val.is_some() && d.test.is_some());
    }

    #[test]
    fn files_with_generated_splits() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join("all.jsonl")).unwrap();
        for i in 0..20 {
            writeln!(f, r#"{{"text": "word{i} alpha", "label": "a"}}"#).unwrap();
            writeln!(f, r#"{{"text": "word{i} beta", "label": "b"}}"#).unwrap();
        }
        let mut cfg = DataConfig {
            train: Some("all.jsonl".into()),
            ..DataConfig::default()
        };
        cfg.resolve_paths(dir.path());
        let d = cfg.prepare(0, true).unwrap();
        assert_eq!(d.test.as_ref().unwrap().len(), 12);
        assert_eq!(d.val.as_ref().unwrap().len(), 6);
        assert_eq!(d.train.len(), 22);
        let d = cfg.prepare(0, false).unwrap();
        assert!(d.val.is_none());

        let missing = DataConfig {
            train: Some(dir.path().join("nope.jsonl")),
            ..DataConfig::default()
        };
        let err = missing.prepare(0, true).unwrap_err().to_string();
        assert!(err.contains("nope.jsonl"), "{err}");
    }
}
