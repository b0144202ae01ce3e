//! Tokenization, detokenization, POS tagging and case-preserving word
//! substitution.
//!
//! Input is NFC-normalized and whitespace runs are collapsed to a single
//! space before splitting, so `detokenize(&tokenize(s)) == normalize(s)`
//! for every string `s`.

mod tagger;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use tagger::{PosLexicon, Tagger};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("token {index} ({surface:?}) is not a word")]
    NotAWord { index: usize, surface: String },
    #[error("replacement {0:?} is not a single word")]
    InvalidReplacement(String),
    #[error("vocabulary must contain at least one word")]
    EmptyVocabulary,
    #[error("unknown POS tag {0:?}")]
    UnknownTag(String),
    #[error("POS lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Punctuation,
    Number,
}

/// Capitalization pattern of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseShape {
    Lower,
    Title,
    Upper,
    Mixed,
}

impl CaseShape {
    pub fn of(surface: &str) -> CaseShape {
        let mut chars = surface.chars();
        let first_upper = chars.next().is_some_and(char::is_uppercase);
        let has_upper = surface.chars().any(char::is_uppercase);
        let has_lower = surface.chars().any(char::is_lowercase);
        let upper_after_first = chars.any(char::is_uppercase);

        if !has_upper {
            CaseShape::Lower
        } else if first_upper && !upper_after_first {
            CaseShape::Title
        } else if !has_lower {
            CaseShape::Upper
        } else {
            CaseShape::Mixed
        }
    }

    /// Re-shape `word` to this pattern. Words already of this shape, and any
    /// word under [`CaseShape::Mixed`], are returned unchanged.
    pub fn apply(self, word: &str) -> String {
        if CaseShape::of(word) == self {
            return word.to_string();
        }
        match self {
            CaseShape::Lower => word.to_lowercase(),
            CaseShape::Upper => word.to_uppercase(),
            CaseShape::Title => {
                let mut chars = word.chars();
                match chars.next() {
                    Some(first) => first
                        .to_uppercase()
                        .chain(chars.as_str().to_lowercase().chars())
                        .collect(),
                    None => String::new(),
                }
            }
            CaseShape::Mixed => word.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    surface: String,
    kind: TokenKind,
    case_shape: CaseShape,
}

impl Token {
    fn new(surface: String, kind: TokenKind) -> Token {
        let case_shape = CaseShape::of(&surface);
        Token {
            surface,
            kind,
            case_shape,
        }
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn kind(&self) -> TokenKind {
        self.kind
    }

    pub fn case_shape(&self) -> CaseShape {
        self.case_shape
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    /// Lowercased surface, the form used for every dictionary lookup.
    pub fn key(&self) -> String {
        self.surface.to_lowercase()
    }
}

/// Coarse universal part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Propn,
    Verb,
    Adj,
    Adv,
    Det,
    Pron,
    Adp,
    Conj,
    Num,
    Punct,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 12] = [
        PosTag::Noun,
        PosTag::Propn,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Det,
        PosTag::Pron,
        PosTag::Adp,
        PosTag::Conj,
        PosTag::Num,
        PosTag::Punct,
        PosTag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Propn => "PROPN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Det => "DET",
            PosTag::Pron => "PRON",
            PosTag::Adp => "ADP",
            PosTag::Conj => "CONJ",
            PosTag::Num => "NUM",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TextError::UnknownTag(s.to_string()))
    }
}

/// Tokens with parallel POS tags and spacing.
///
/// `space_before[i]` records whether a single space precedes token `i` in
/// the detokenized string; it is always `false` for the first token.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaggedText {
    tokens: Vec<Token>,
    tags: Vec<PosTag>,
    space_before: Vec<bool>,
}

impl TaggedText {
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tags(&self) -> &[PosTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, index: usize) -> Option<&Token> {
        self.tokens.get(index)
    }

    pub fn tag(&self, index: usize) -> Option<PosTag> {
        self.tags.get(index).copied()
    }

    /// Indices of word tokens, in order.
    pub fn word_positions(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_word())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_word()).count()
    }

    /// Lowercased surfaces of all word tokens.
    pub fn word_keys(&self) -> impl Iterator<Item = String> + '_ {
        self.tokens.iter().filter(|t| t.is_word()).map(Token::key)
    }

    /// Same kinds, tags and spacing with every surface rewritten by `f`.
    pub(crate) fn map_surfaces<F>(&self, mut f: F) -> TaggedText
    where
        F: FnMut(&Token) -> String,
    {
        let tokens = self.tokens.iter().map(|t| Token::new(f(t), t.kind)).collect();
        TaggedText {
            tokens,
            tags: self.tags.clone(),
            space_before: self.space_before.clone(),
        }
    }

    pub(crate) fn set_tags(&mut self, tags: Vec<PosTag>) {
        debug_assert_eq!(tags.len(), self.tokens.len());
        self.tags = tags;
    }
}

/// NFC-normalize and collapse every whitespace run into one space.
pub fn normalize(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split normalized text on whitespace, then peel leading and trailing
/// non-alphanumeric characters into single-character punctuation tokens.
/// Interior apostrophes and hyphens stay inside the word.
///
/// Word tokens are tagged [`PosTag::Other`] until [`Tagger::tag`] runs.
pub fn tokenize(text: &str) -> TaggedText {
    let normalized = normalize(text);
    let mut out = TaggedText::default();
    for raw in scan(&normalized) {
        let tag = match raw.kind {
            TokenKind::Punctuation => PosTag::Punct,
            TokenKind::Number => PosTag::Num,
            TokenKind::Word => PosTag::Other,
        };
        out.tokens.push(Token::new(normalized[raw.span].to_string(), raw.kind));
        out.tags.push(tag);
        out.space_before.push(raw.space_before);
    }
    out
}

struct RawToken {
    span: Range<usize>,
    kind: TokenKind,
    space_before: bool,
}

/// Token boundaries of `text`. Whitespace runs of any length separate
/// chunks, so normalized and un-normalized text yield the same tokens.
fn scan(text: &str) -> Vec<RawToken> {
    let mut out: Vec<RawToken> = Vec::new();
    let base = text.as_ptr() as usize;
    for chunk in text.split(char::is_whitespace).filter(|c| !c.is_empty()) {
        let offset = chunk.as_ptr() as usize - base;
        let core = chunk
            .char_indices()
            .find(|(_, c)| c.is_alphanumeric())
            .map(|(start, _)| {
                let (last, c) = chunk
                    .char_indices()
                    .rev()
                    .find(|(_, c)| c.is_alphanumeric())
                    .expect("found above");
                start..last + c.len_utf8()
            });

        let mut pieces = Vec::new();
        let (lead, trail) = match &core {
            Some(core) => (0..core.start, core.end..chunk.len()),
            None => (0..chunk.len(), chunk.len()..chunk.len()),
        };
        for (i, c) in chunk[lead.clone()].char_indices() {
            pieces.push((i..i + c.len_utf8(), TokenKind::Punctuation));
        }
        if let Some(core) = core {
            let kind = if chunk[core.clone()].chars().any(char::is_alphabetic) {
                TokenKind::Word
            } else {
                TokenKind::Number
            };
            pieces.push((core, kind));
        }
        for (i, c) in chunk[trail.clone()].char_indices() {
            let at = trail.start + i;
            pieces.push((at..at + c.len_utf8(), TokenKind::Punctuation));
        }

        for (n, (span, kind)) in pieces.into_iter().enumerate() {
            out.push(RawToken {
                span: offset + span.start..offset + span.end,
                kind,
                space_before: n == 0 && !out.is_empty(),
            });
        }
    }
    out
}

/// Token spans over the NFC form of a text with its original whitespace.
///
/// Token `i` of [`Layout`] is token `i` of [`tokenize`] on the same input,
/// so surfaces edited on a [`TaggedText`] can be written back without
/// disturbing line breaks or spacing.
#[derive(Debug, Clone)]
pub struct Layout {
    text: String,
    spans: Vec<Range<usize>>,
}

impl Layout {
    pub fn new(text: &str) -> Layout {
        let text: String = text.nfc().collect();
        let spans = scan(&text).into_iter().map(|t| t.span).collect();
        Layout { text, spans }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// The original text with every token replaced by the surface of the
    /// matching token in `tokens`.
    pub fn render(&self, tokens: &TaggedText) -> String {
        assert_eq!(tokens.len(), self.spans.len(), "layout and tokens disagree");
        let mut out = String::with_capacity(self.text.len());
        let mut cursor = 0;
        for (span, token) in self.spans.iter().zip(tokens.tokens()) {
            out.push_str(&self.text[cursor..span.start]);
            out.push_str(token.surface());
            cursor = span.end;
        }
        out.push_str(&self.text[cursor..]);
        out
    }
}

pub fn detokenize(text: &TaggedText) -> String {
    let mut out = String::new();
    for (token, &space) in text.tokens.iter().zip(&text.space_before) {
        if space {
            out.push(' ');
        }
        out.push_str(&token.surface);
    }
    out
}

/// Replace the word at `index`, re-shaping `replacement` to the original
/// token's capitalization. Tags and spacing are untouched.
pub fn substitute_token(text: &TaggedText, index: usize, replacement: &str) -> Result<TaggedText, TextError> {
    let token = text.tokens.get(index).ok_or(TextError::IndexOutOfRange {
        index,
        len: text.tokens.len(),
    })?;
    if !token.is_word() {
        return Err(TextError::NotAWord {
            index,
            surface: token.surface.clone(),
        });
    }
    validate_word(replacement)?;

    let mut out = text.clone();
    let surface = token.case_shape.apply(replacement);
    out.tokens[index] = Token::new(surface, TokenKind::Word);
    Ok(out)
}

/// A replacement must tokenize to exactly one word token, otherwise the
/// result would not survive a detokenize/tokenize round trip.
fn validate_word(word: &str) -> Result<(), TextError> {
    let t = tokenize(word);
    if t.len() == 1 && t.tokens[0].is_word() && t.tokens[0].surface == word {
        Ok(())
    } else {
        Err(TextError::InvalidReplacement(word.to_string()))
    }
}

/// Source-language vocabulary: a non-empty set of lowercase words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    words: BTreeSet<String>,
}

impl Vocabulary {
    pub fn new<I, S>(words: I) -> Result<Vocabulary, TextError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(TextError::EmptyVocabulary);
        }
        Ok(Vocabulary { words })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    /// Words in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}
