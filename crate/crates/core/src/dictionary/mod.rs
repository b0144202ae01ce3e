//! Word translation dictionaries induced by probing a translator.
//!
//! For a source word `w` (optionally paired with a POS tag `s`), the score of
//! a target word `v` is the ratio between how often `v` appears in
//! translations of sentences where one word was replaced by `w`, and how
//! often it appears in translations of unmodified sentences. Ratios rather
//! than raw rates keep articles and other ubiquitous words from dominating.

mod build;
mod tsv;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineError;
use crate::text::PosTag;

pub use build::{build_dictionary, score, BuildConfig, BuildReport, ProbeStats};
pub use tsv::{load_dictionary, parse_dictionary, save_dictionary, write_dictionary, TSV_HEADER};

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("samples_per_word must be at least 1")]
    NoSamples,
    #[error("corpus contains no word tokens")]
    NoWords,
    #[error("engine failed while probing {key}: {source}")]
    Engine {
        key: DictKey,
        #[source]
        source: EngineError,
    },
    #[error("no entry for {0}")]
    MissingKey(DictKey),
    #[error("rank {rank} out of range for {key} ({len} candidates)")]
    RankOutOfRange { key: DictKey, rank: usize, len: usize },
    #[error("no probe statistics for {0}")]
    UnknownKey(DictKey),
    #[error("{key}: {message}")]
    Invalid { key: DictKey, message: String },
    #[error("dictionary line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryMode {
    /// Keyed by source word.
    Plain,
    /// Keyed by (source word, POS tag).
    PosKeyed,
}

/// A source word, with its POS tag in [`DictionaryMode::PosKeyed`]
/// dictionaries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DictKey {
    pub word: String,
    pub tag: Option<PosTag>,
}

impl DictKey {
    pub fn plain(word: &str) -> DictKey {
        DictKey {
            word: word.to_lowercase(),
            tag: None,
        }
    }

    pub fn tagged(word: &str, tag: PosTag) -> DictKey {
        DictKey {
            word: word.to_lowercase(),
            tag: Some(tag),
        }
    }

    fn mode(&self) -> DictionaryMode {
        match self.tag {
            None => DictionaryMode::Plain,
            Some(_) => DictionaryMode::PosKeyed,
        }
    }
}

impl fmt::Display for DictKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            None => write!(f, "{:?}", self.word),
            Some(tag) => write!(f, "({:?}, {tag})", self.word),
        }
    }
}

/// A candidate translation and its ratio score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub target: String,
    pub score: f64,
}

/// Descending score, ties broken by ascending target word.
fn rank_order(a: &RankedEntry, b: &RankedEntry) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.target.cmp(&b.target))
}

/// Ranked candidate lists `L(w)` or `L(w, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordDictionary {
    mode: DictionaryMode,
    lists: BTreeMap<DictKey, Vec<RankedEntry>>,
}

impl WordDictionary {
    pub fn empty(mode: DictionaryMode) -> WordDictionary {
        WordDictionary {
            mode,
            lists: BTreeMap::new(),
        }
    }

    /// Build from explicit lists. Lists are sorted into rank order; keys
    /// must match `mode`, lists must be non-empty and scores positive and
    /// finite.
    pub fn from_lists(
        mode: DictionaryMode,
        lists: impl IntoIterator<Item = (DictKey, Vec<RankedEntry>)>,
    ) -> Result<WordDictionary, DictionaryError> {
        let mut out = BTreeMap::new();
        for (key, mut list) in lists {
            let invalid = |message: &str| DictionaryError::Invalid {
                key: key.clone(),
                message: message.to_string(),
            };
            if key.mode() != mode {
                return Err(invalid("key does not match dictionary mode"));
            }
            if list.is_empty() {
                return Err(invalid("empty candidate list"));
            }
            if list
                .iter()
                .any(|e| !(e.score.is_finite() && e.score > 0.0) || e.target.is_empty())
            {
                return Err(invalid("scores must be finite and positive"));
            }
            for entry in &mut list {
                entry.target = entry.target.to_lowercase();
            }
            list.sort_by(rank_order);
            if out.insert(key.clone(), list).is_some() {
                return Err(invalid("duplicate key"));
            }
        }
        Ok(WordDictionary { mode, lists: out })
    }

    pub fn mode(&self) -> DictionaryMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn entry_count(&self) -> usize {
        self.lists.values().map(Vec::len).sum()
    }

    pub fn keys(&self) -> impl Iterator<Item = &DictKey> {
        self.lists.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DictKey, &[RankedEntry])> {
        self.lists.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn list(&self, key: &DictKey) -> Option<&[RankedEntry]> {
        self.lists.get(key).map(Vec::as_slice)
    }

    /// `L(key, rank)`, with `rank` starting at 1.
    pub fn lookup(&self, key: &DictKey, rank: usize) -> Result<&str, DictionaryError> {
        let list = self
            .lists
            .get(key)
            .ok_or_else(|| DictionaryError::MissingKey(key.clone()))?;
        if rank == 0 || rank > list.len() {
            return Err(DictionaryError::RankOutOfRange {
                key: key.clone(),
                rank,
                len: list.len(),
            });
        }
        Ok(&list[rank - 1].target)
    }

    /// The most likely translation, `L(key, 1)`.
    pub fn best(&self, key: &DictKey) -> Option<&str> {
        self.lists.get(key).map(|l| l[0].target.as_str())
    }

    /// Distinct source words, ascending. This is the substitution
    /// vocabulary.
    pub fn source_words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.lists.keys().map(|k| k.word.as_str()).collect();
        words.dedup();
        words
    }

    pub fn vocab_size(&self) -> usize {
        self.source_words().len()
    }

    pub fn contains_word(&self, word: &str) -> bool {
        let word = word.to_lowercase();
        self.lists.keys().any(|k| k.word == word)
    }
}

/// `c(w, s)`: the head score of each list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfidenceTable {
    scores: BTreeMap<DictKey, f64>,
}

impl ConfidenceTable {
    pub fn from_dictionary(dict: &WordDictionary) -> ConfidenceTable {
        ConfidenceTable {
            scores: dict.lists.iter().map(|(k, v)| (k.clone(), v[0].score)).collect(),
        }
    }

    pub fn get(&self, key: &DictKey) -> Option<f64> {
        self.scores.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DictKey, f64)> {
        self.scores.iter().map(|(k, &v)| (k, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(target: &str, score: f64) -> RankedEntry {
        RankedEntry {
            target: target.into(),
            score,
        }
    }

    pub(crate) fn running_example() -> WordDictionary {
        WordDictionary::from_lists(
            DictionaryMode::Plain,
            [
                (DictKey::plain("alice"), vec![entry("alice", 40.0)]),
                (DictKey::plain("bob"), vec![entry("bob", 38.0)]),
                (
                    DictKey::plain("hideout"),
                    vec![entry("cachette", 55.0), entry("refuge", 3.0)],
                ),
                (
                    DictKey::plain("store"),
                    vec![entry("magasin", 20.0), entry("boutique", 31.0)],
                ),
            ],
        )
        .unwrap()
    }

    #[test]
    fn lookup_by_rank() {
        let d = running_example();
        assert_eq!(d.lookup(&DictKey::plain("hideout"), 1).unwrap(), "cachette");
        assert_eq!(d.lookup(&DictKey::plain("store"), 1).unwrap(), "boutique");
        assert_eq!(d.lookup(&DictKey::plain("store"), 2).unwrap(), "magasin");
        assert!(matches!(
            d.lookup(&DictKey::plain("store"), 3),
            Err(DictionaryError::RankOutOfRange { rank: 3, len: 2, .. })
        ));
        assert!(matches!(
            d.lookup(&DictKey::plain("store"), 0),
            Err(DictionaryError::RankOutOfRange { .. })
        ));
        assert!(matches!(
            d.lookup(&DictKey::plain("castle"), 1),
            Err(DictionaryError::MissingKey(_))
        ));
    }

    #[test]
    fn ties_break_lexicographically() {
        let d = WordDictionary::from_lists(
            DictionaryMode::Plain,
            [(
                DictKey::plain("x"),
                vec![entry("zeta", 2.0), entry("alpha", 2.0), entry("mid", 3.0)],
            )],
        )
        .unwrap();
        let targets: Vec<_> = d
            .list(&DictKey::plain("x"))
            .unwrap()
            .iter()
            .map(|e| e.target.as_str())
            .collect();
        assert_eq!(targets, ["mid", "alpha", "zeta"]);
    }

    #[test]
    fn confidence_is_head_score() {
        let d = running_example();
        let c = ConfidenceTable::from_dictionary(&d);
        assert_eq!(c.len(), d.len());
        for (key, list) in d.iter() {
            assert_eq!(c.get(key), Some(list[0].score));
        }
    }

    #[test]
    fn rejects_inconsistent_lists() {
        assert!(
            WordDictionary::from_lists(DictionaryMode::PosKeyed, [(DictKey::plain("x"), vec![entry("y", 1.0)])])
                .is_err()
        );
        assert!(WordDictionary::from_lists(DictionaryMode::Plain, [(DictKey::plain("x"), vec![])]).is_err());
        assert!(
            WordDictionary::from_lists(DictionaryMode::Plain, [(DictKey::plain("x"), vec![entry("y", 0.0)])]).is_err()
        );
        assert!(WordDictionary::from_lists(
            DictionaryMode::Plain,
            [(DictKey::plain("x"), vec![entry("y", f64::NAN)])]
        )
        .is_err());
    }

    #[test]
    fn source_words_dedup_across_tags() {
        let d = WordDictionary::from_lists(
            DictionaryMode::PosKeyed,
            [
                (DictKey::tagged("run", PosTag::Verb), vec![entry("courir", 5.0)]),
                (DictKey::tagged("run", PosTag::Noun), vec![entry("course", 4.0)]),
                (DictKey::tagged("dog", PosTag::Noun), vec![entry("chien", 9.0)]),
            ],
        )
        .unwrap();
        assert_eq!(d.source_words(), ["dog", "run"]);
        assert_eq!(d.vocab_size(), 2);
        assert!(d.contains_word("RUN"));
    }
}
