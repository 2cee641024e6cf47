//! Dataset ingestion, tokenization, per-class sampling and splitting, and the
//! lookup tables (synonym lexicon, vocabulary) the augmenters consume.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::augment::AugmentOpKind;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// One line of a dataset file before tokenization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawExample {
    pub text: String,
    pub label: String,
}

/// Where an example came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Original,
    Augmented { op: AugmentOpKind, tau: f64 },
}

impl Origin {
    pub fn is_augmented(&self) -> bool {
        matches!(self, Origin::Augmented { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedExample {
    pub tokens: Vec<String>,
    pub class_id: usize,
    pub origin: Origin,
}

impl TokenizedExample {
    pub fn original(tokens: Vec<String>, class_id: usize) -> Self {
        TokenizedExample {
            tokens,
            class_id,
            origin: Origin::Original,
        }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub examples: Vec<TokenizedExample>,
    pub class_names: Vec<String>,
}

impl Dataset {
    /// Checks the class-id and token invariants.
    pub fn new(examples: Vec<TokenizedExample>, class_names: Vec<String>) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::invalid(format!(
                "a dataset needs at least two classes, found {}",
                class_names.len()
            )));
        }
        for ex in &examples {
            if ex.class_id >= class_names.len() {
                return Err(Error::invalid(format!(
                    "class id {} out of range for {} classes",
                    ex.class_id,
                    class_names.len()
                )));
            }
            if ex.tokens.is_empty() {
                return Err(Error::invalid("example with no tokens"));
            }
        }
        Ok(Dataset {
            examples,
            class_names,
        })
    }

    /// Number of classes.
    pub fn c(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Example indices grouped by class id.
    pub fn by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.c()];
        for (i, ex) in self.examples.iter().enumerate() {
            groups[ex.class_id].push(i);
        }
        groups
    }

    pub fn class_id(&self, name: &str) -> Option<usize> {
        self.class_names
            .binary_search_by(|c| c.as_str().cmp(name))
            .ok()
    }

    fn subset(&self, mut keep: Vec<usize>) -> Dataset {
        keep.sort_unstable();
        Dataset {
            examples: keep.into_iter().map(|i| self.examples[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Re-labels `self` against another class list, for evaluation sets
    /// loaded separately from the training data.
    pub fn align_to(&self, class_names: &[String]) -> Result<Dataset> {
        let mut examples = Vec::with_capacity(self.len());
        for ex in &self.examples {
            let name = &self.class_names[ex.class_id];
            let class_id = class_names
                .binary_search(name)
                .map_err(|_| Error::invalid(format!("label {name:?} not among training classes")))?;
            examples.push(TokenizedExample {
                class_id,
                ..ex.clone()
            });
        }
        Dataset::new(examples, class_names.to_vec())
    }
}

/// Lowercases, splits on whitespace, strips leading and trailing
/// punctuation from each token and drops tokens left empty.
pub fn tokenize(text: &str) -> Result<Vec<String>> {
    let tokens: Vec<String> = text
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(Error::Untokenizable(text.to_string()));
    }
    Ok(tokens)
}

/// Builds a dataset from raw examples. Class ids follow sorted label order.
pub fn from_raw(raw: &[RawExample]) -> Result<Dataset> {
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels: BTreeSet<&str> = raw.iter().map(|r| r.label.as_str()).collect();
    let class_names: Vec<String> = labels.into_iter().map(str::to_string).collect();
    let ids: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let examples = raw
        .iter()
        .map(|r| Ok(TokenizedExample::original(tokenize(&r.text)?, ids[r.label.as_str()])))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(examples, class_names)
}

#[derive(Deserialize)]
struct Line {
    text: String,
    label: String,
}

/// Reads a JSON Lines file with string fields `text` and `label`.
/// Extra fields are ignored, so augmented output can be read back.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut raw = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: Line = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if rec.text.trim().is_empty() {
            return Err(parse_err("empty text".into()));
        }
        if rec.label.is_empty() {
            return Err(parse_err("empty label".into()));
        }
        tokenize(&rec.text).map_err(|e| parse_err(e.to_string()))?;
        raw.push(RawExample {
            text: rec.text,
            label: rec.label,
        });
    }
    from_raw(&raw).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: m,
        },
        other => other,
    })
}

/// Samples exactly `n_c` examples per class without replacement.
pub fn balance_classes(ds: &Dataset, n_c: usize, seed: u64) -> Result<Dataset> {
    if n_c == 0 {
        return Err(Error::invalid("n_c must be positive"));
    }
    let mut keep = Vec::with_capacity(n_c * ds.c());
    for (class_id, members) in ds.by_class().into_iter().enumerate() {
        if members.len() < n_c {
            return Err(Error::ClassTooSmall {
                class: ds.class_names[class_id].clone(),
                available: members.len(),
                required: n_c,
            });
        }
        let mut rng = rng::stream(seed, Purpose::Balance, class_id as u64);
        keep.extend(
            rng::choose_distinct(&mut rng, members.len(), n_c)
                .into_iter()
                .map(|j| members[j]),
        );
    }
    Ok(ds.subset(keep))
}

/// How many examples of each class go to the test side of a split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitRule {
    Fraction(f64),
    PerClassCount(usize),
}

/// Stratified split; every class lands on both sides.
pub fn split(ds: &Dataset, rule: SplitRule, seed: u64) -> Result<(Dataset, Dataset)> {
    if let SplitRule::Fraction(f) = rule {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::invalid(format!("test fraction {f} not in (0, 1)")));
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class_id, members) in ds.by_class().into_iter().enumerate() {
        let n = members.len();
        let n_test = match rule {
            SplitRule::Fraction(f) => (f * n as f64).round() as usize,
            SplitRule::PerClassCount(k) => k,
        };
        if n_test == 0 || n_test >= n {
            return Err(Error::ClassTooSmall {
                class: ds.class_names[class_id].clone(),
                available: n,
                required: n_test.max(1) + 1,
            });
        }
        let mut rng = rng::stream(seed, Purpose::Split, class_id as u64);
        let order = rng::choose_distinct(&mut rng, n, n);
        test.extend(order[..n_test].iter().map(|&j| members[j]));
        train.extend(order[n_test..].iter().map(|&j| members[j]));
    }
    Ok((ds.subset(train), ds.subset(test)))
}

/// Headword → synonyms. Headwords and synonyms are lowercase and no list
/// contains its own headword.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    /// Builds a lexicon, normalizing case and dropping self-synonyms and
    /// entries left empty.
    pub fn from_entries<I, S, L>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, L)>,
        S: AsRef<str>,
        L: IntoIterator,
        L::Item: AsRef<str>,
    {
        let mut lex = SynonymLexicon::default();
        for (word, syns) in entries {
            lex.insert(word.as_ref(), syns);
        }
        lex.entries.retain(|_, v| !v.is_empty());
        lex
    }

    fn insert<L>(&mut self, word: &str, syns: L) -> bool
    where
        L: IntoIterator,
        L::Item: AsRef<str>,
    {
        let head = word.trim().to_lowercase();
        let list = self.entries.entry(head.clone()).or_default();
        for s in syns {
            let s = s.as_ref().trim().to_lowercase();
            if !s.is_empty() && s != head && !list.contains(&s) {
                list.push(s);
            }
        }
        !list.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        match self.entries.get(word) {
            Some(v) => Some(v),
            None => self.entries.get(&word.to_lowercase()).map(|v| v.as_slice()),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Drops stop words as headwords, so synonym operators never touch them.
    pub fn without_stop_words(mut self, stop_words: &HashSet<String>) -> Self {
        self.entries.retain(|k, _| !stop_words.contains(k));
        self
    }
}

/// Reads a `word<TAB>syn1,syn2,...` file. `#` lines are comments.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<SynonymLexicon> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lex = SynonymLexicon::default();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (word, syns) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected word<TAB>synonyms".into(),
        })?;
        if word.trim().is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "empty headword".into(),
            });
        }
        if !lex.insert(word, syns.split(',')) {
            warn!(
                "{}:{}: dropping {:?}, no synonyms besides itself",
                path.display(),
                i + 1,
                word
            );
        }
    }
    lex.entries.retain(|_, v| !v.is_empty());
    Ok(lex)
}

/// Reads a stop-word list, one word per line.
pub fn load_stop_words(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(body
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Sorted distinct tokens.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let tokens: Vec<String> = set.into_iter().collect();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn build_vocab(ds: &Dataset) -> Result<Vocabulary> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Vocabulary::from_tokens(
        ds.examples.iter().flat_map(|e| e.tokens.iter().cloned()),
    ))
}
