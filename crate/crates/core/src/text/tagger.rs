use std::collections::HashMap;
use std::path::Path;

use super::{CaseShape, PosTag, TaggedText, TextError, TokenKind};

const FIXTURE_LEXICON: &str = include_str!("../../fixtures/pos_lexicon.tsv");

// Checked in order; first match wins.
const SUFFIX_RULES: &[(&str, PosTag)] = &[
    ("ly", PosTag::Adv),
    ("ing", PosTag::Verb),
    ("ed", PosTag::Verb),
    ("ous", PosTag::Adj),
    ("ful", PosTag::Adj),
    ("able", PosTag::Adj),
    ("ible", PosTag::Adj),
    ("ive", PosTag::Adj),
    ("less", PosTag::Adj),
    ("ish", PosTag::Adj),
    ("tion", PosTag::Noun),
    ("ness", PosTag::Noun),
    ("ment", PosTag::Noun),
    ("ity", PosTag::Noun),
];

/// Word to tag table, read from `word<TAB>tag` lines.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: HashMap<String, PosTag>,
}

impl PosLexicon {
    pub fn parse(tsv: &str) -> Result<PosLexicon, TextError> {
        let mut entries = HashMap::new();
        for (i, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(word), Some(tag), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(TextError::Lexicon {
                    line: i + 1,
                    message: "expected word<TAB>tag".into(),
                });
            };
            let tag = tag.trim().parse::<PosTag>().map_err(|e| TextError::Lexicon {
                line: i + 1,
                message: e.to_string(),
            })?;
            entries.insert(word.trim().to_lowercase(), tag);
        }
        Ok(PosLexicon { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PosLexicon, TextError> {
        let data = std::fs::read_to_string(path.as_ref()).map_err(|e| TextError::Lexicon {
            line: 0,
            message: e.to_string(),
        })?;
        Self::parse(&data)
    }

    pub fn fixture() -> PosLexicon {
        Self::parse(FIXTURE_LEXICON).expect("bundled POS lexicon is well formed")
    }

    pub fn get(&self, word: &str) -> Option<PosTag> {
        self.entries.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Lexicon lookup, then capitalization and suffix heuristics, then NOUN.
#[derive(Debug, Clone, Default)]
pub struct Tagger {
    lexicon: PosLexicon,
}

impl Tagger {
    pub fn new(lexicon: PosLexicon) -> Tagger {
        Tagger { lexicon }
    }

    pub fn fixture() -> Tagger {
        Tagger::new(PosLexicon::fixture())
    }

    pub fn lexicon(&self) -> &PosLexicon {
        &self.lexicon
    }

    pub fn tag(&self, mut text: TaggedText) -> TaggedText {
        let mut tags = Vec::with_capacity(text.len());
        let mut sentence_start = true;
        for token in text.tokens() {
            let tag = match token.kind() {
                TokenKind::Punctuation => PosTag::Punct,
                TokenKind::Number => PosTag::Num,
                TokenKind::Word => self.tag_word(token.surface(), token.case_shape(), sentence_start),
            };
            sentence_start = matches!(token.surface(), "." | "!" | "?");
            tags.push(tag);
        }
        text.set_tags(tags);
        text
    }

    /// Context-free tag guess for a single word, as if mid-sentence.
    pub fn tag_word_alone(&self, word: &str) -> PosTag {
        self.tag_word(word, CaseShape::of(word), false)
    }

    fn tag_word(&self, surface: &str, shape: CaseShape, sentence_start: bool) -> PosTag {
        if let Some(tag) = self.lexicon.get(surface) {
            return tag;
        }
        if !sentence_start && matches!(shape, CaseShape::Title | CaseShape::Upper) {
            return PosTag::Propn;
        }
        let lower = surface.to_lowercase();
        SUFFIX_RULES
            .iter()
            .find(|(suffix, _)| lower.len() > suffix.len() + 1 && lower.ends_with(suffix))
            .map(|&(_, tag)| tag)
            .unwrap_or(PosTag::Noun)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn tags_running_example() {
        let t = Tagger::fixture().tag(tokenize("Alice is heading ."));
        assert_eq!(t.tags(), [PosTag::Propn, PosTag::Verb, PosTag::Verb, PosTag::Punct]);
    }

    #[test]
    fn all_punctuation() {
        let t = Tagger::fixture().tag(tokenize("... !? ,"));
        assert!(t.tags().iter().all(|&t| t == PosTag::Punct));
    }

    #[test]
    fn unknown_word_falls_back_to_noun() {
        let t = Tagger::fixture().tag(tokenize("blarg"));
        assert_eq!(t.tags(), [PosTag::Noun]);
    }

    #[test]
    fn heuristics() {
        let tagger = Tagger::new(PosLexicon::default());
        let t = tagger.tag(tokenize("Zorn walked sadly to Paris. Quietness"));
        assert_eq!(
            t.tags(),
            [
                PosTag::Noun,
                PosTag::Verb,
                PosTag::Adv,
                PosTag::Noun,
                PosTag::Propn,
                PosTag::Punct,
                PosTag::Noun
            ]
        );
        assert_eq!(tagger.tag_word_alone("Paris"), PosTag::Propn);
        assert_eq!(tagger.tag_word_alone("bed"), PosTag::Noun);
    }

    #[test]
    fn lexicon_errors_name_the_line() {
        let err = PosLexicon::parse("dog\tNOUN\ncat\tFELINE\n").unwrap_err();
        assert_eq!(
            err,
            TextError::Lexicon {
                line: 2,
                message: "unknown POS tag \"FELINE\"".into()
            }
        );
        assert!(matches!(
            PosLexicon::parse("dog NOUN"),
            Err(TextError::Lexicon { line: 1, .. })
        ));
    }
}
