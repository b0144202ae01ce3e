use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EngineError, Translator};
use crate::text::{tokenize, CaseShape, Layout};

const FIXTURE_LEXICON: &str = include_str!("../../fixtures/mock_en_fr.tsv");

/// What the mock does with a word missing from its lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Passthrough {
    /// Copy the source word verbatim.
    #[default]
    Copy,
    /// Fail the call.
    Reject,
}

/// One-to-one source→target word map driving the mock engine.
///
/// Translation is word by word: token order, punctuation, numbers,
/// whitespace and each word's case shape are preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockLexicon {
    entries: BTreeMap<String, String>,
    passthrough: Passthrough,
    engine_id: String,
}

impl MockLexicon {
    pub fn new<I, S, T>(pairs: I) -> Result<MockLexicon, EngineError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut entries = BTreeMap::new();
        let mut seen: HashMap<String, String> = HashMap::new();
        for (source, target) in pairs {
            let source = source.as_ref().trim().to_lowercase();
            let target = target.as_ref().trim().to_lowercase();
            if source.is_empty() || target.is_empty() {
                return Err(EngineError::Lexicon("empty word".into()));
            }
            if let Some(other) = seen.get(&target) {
                if other != &source {
                    return Err(EngineError::Lexicon(format!(
                        "not one-to-one: {other:?} and {source:?} both map to {target:?}"
                    )));
                }
            }
            if let Some(previous) = entries.insert(source.clone(), target.clone()) {
                if previous != target {
                    return Err(EngineError::Lexicon(format!("{source:?} has two translations")));
                }
            }
            seen.insert(target, source);
        }
        Ok(MockLexicon {
            entries,
            passthrough: Passthrough::Copy,
            engine_id: "mock".into(),
        })
    }

    /// Parse `source<TAB>target` lines.
    pub fn parse(tsv: &str) -> Result<MockLexicon, EngineError> {
        let mut pairs = Vec::new();
        for (i, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match line.split('\t').collect::<Vec<_>>().as_slice() {
                [s, t] => pairs.push((s.to_string(), t.to_string())),
                _ => {
                    return Err(EngineError::Lexicon(format!(
                        "line {}: expected source<TAB>target",
                        i + 1
                    )))
                }
            }
        }
        Self::new(pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MockLexicon, EngineError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The bundled English→French lexicon.
    pub fn fixture() -> MockLexicon {
        Self::parse(FIXTURE_LEXICON).expect("bundled mock lexicon is well formed")
    }

    pub fn with_passthrough(mut self, passthrough: Passthrough) -> MockLexicon {
        self.passthrough = passthrough;
        self
    }

    pub(crate) fn with_engine_id(mut self, id: &str) -> MockLexicon {
        self.engine_id = id.to_string();
        self
    }

    pub fn get(&self, source: &str) -> Option<&str> {
        self.entries.get(&source.to_lowercase()).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(s, t)| (s.as_str(), t.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn translate_word(&self, word: &str) -> Option<String> {
        self.get(word).map(|t| CaseShape::of(word).apply(t))
    }
}

impl Translator for MockLexicon {
    fn translate(&self, text: &str) -> Result<String, EngineError> {
        let tokens = tokenize(text);
        let mut missing = None;
        let translated = tokens.map_surfaces(|token| {
            if !token.is_word() {
                return token.surface().to_string();
            }
            match self.get(token.surface()) {
                Some(target) => token.case_shape().apply(target),
                None => {
                    if self.passthrough == Passthrough::Reject && missing.is_none() {
                        missing = Some(token.surface().to_string());
                    }
                    token.surface().to_string()
                }
            }
        });
        if let Some(word) = missing {
            return Err(EngineError::UnknownWord {
                engine: self.engine_id.clone(),
                word,
            });
        }
        Ok(Layout::new(text).render(&translated))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MockLexicon {
        MockLexicon::new([("alice", "alice"), ("is", "est"), ("heading", "dirige")]).unwrap()
    }

    #[test]
    fn word_by_word() {
        assert_eq!(small().translate("Alice is heading").unwrap(), "Alice est dirige");
        assert_eq!(small().translate("ALICE is Heading!").unwrap(), "ALICE est Dirige!");
        assert_eq!(
            small().translate("Alice\n\nis  heading").unwrap(),
            "Alice\n\nest  dirige"
        );
    }

    #[test]
    fn unknown_words() {
        assert_eq!(small().translate("Alice is zorping.").unwrap(), "Alice est zorping.");
        let strict = small().with_passthrough(Passthrough::Reject);
        assert!(matches!(
            strict.translate("Alice is zorping."),
            Err(EngineError::UnknownWord { word, .. }) if word == "zorping"
        ));
    }

    #[test]
    fn rejects_non_injective() {
        assert!(MockLexicon::new([("a", "x"), ("b", "x")]).is_err());
        assert!(MockLexicon::new([("a", "x"), ("a", "y")]).is_err());
        assert!(MockLexicon::new([("a", "x"), ("a", "x")]).is_ok());
    }

    #[test]
    fn fixture_is_injective_and_covers_running_example() {
        let lex = MockLexicon::fixture();
        assert!(lex.len() > 150);
        assert_eq!(lex.get("hideout"), Some("cachette"));
        assert_eq!(lex.get("store"), Some("boutique"));
        assert_eq!(
            lex.translate("Alice is heading to the hideout.").unwrap(),
            "Alice se dirige vers la cachette."
        );
    }

    #[test]
    fn deterministic() {
        let lex = MockLexicon::fixture();
        let text = "One morning, Emma went to the park with a red kite.";
        assert_eq!(lex.translate(text).unwrap(), lex.translate(text).unwrap());
    }
}
