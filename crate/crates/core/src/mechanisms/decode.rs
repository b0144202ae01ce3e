use serde::{Deserialize, Serialize};

use super::{SubstitutionHistory, SubstitutionRecord};
use crate::dictionary::{DictKey, DictionaryMode, WordDictionary};
use crate::text::{tokenize, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissReason {
    /// No candidate translation of the substitute occurs in the output.
    NotFound,
    /// The dictionary has no entry for the original word.
    OriginalUnknown,
    /// The dictionary has no entry for the substitute.
    SubstituteUnknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeMiss {
    pub record: SubstitutionRecord,
    pub reason: MissReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub y_pri: String,
    pub misses: Vec<DecodeMiss>,
    /// Output token index consumed by each history record, `None` for
    /// misses. Parallel to the history.
    pub replaced: Vec<Option<usize>>,
}

fn key_for(dict: &WordDictionary, word: &str, record: &SubstitutionRecord) -> DictKey {
    match (dict.mode(), record.tag) {
        (DictionaryMode::PosKeyed, Some(tag)) => DictKey::tagged(word, tag),
        _ => DictKey::plain(word),
    }
}

/// Undo the substitutions of `history` in the translated text.
///
/// Records are handled in history order. For a record (w → u) the ranked
/// translations of `u` are tried best first; the first one present as a
/// whole word (case-insensitive) among the not yet consumed tokens wins.
/// When it occurs several times, the occurrence whose relative position is
/// closest to the record's relative position in the source is taken
/// (earliest on ties). That token becomes the best translation of `w`,
/// shaped like the token it replaces. Records that cannot be resolved are
/// reported in `misses` and leave the text untouched.
pub fn decode(y_pub: &str, history: &SubstitutionHistory, dict: &WordDictionary) -> DecodeResult {
    let mut tokens = tokenize(y_pub);
    let m = tokens.len();
    let n = history.source_len.max(1);
    let mut consumed = vec![false; m];
    let mut misses = Vec::new();
    let mut replaced = Vec::with_capacity(history.len());

    for record in history.iter() {
        let miss = |reason| DecodeMiss {
            record: record.clone(),
            reason,
        };
        let Some(restored) = dict.best(&key_for(dict, &record.original, record)).map(str::to_string) else {
            misses.push(miss(MissReason::OriginalUnknown));
            replaced.push(None);
            continue;
        };
        let Some(candidates) = dict.list(&key_for(dict, &record.substitute, record)) else {
            misses.push(miss(MissReason::SubstituteUnknown));
            replaced.push(None);
            continue;
        };

        let distance = |j: usize| (record.position * m).abs_diff(j * n);
        let hit = candidates.iter().find_map(|candidate| {
            (0..m)
                .filter(|&j| {
                    !consumed[j] && tokens.tokens()[j].is_word() && tokens.tokens()[j].key() == candidate.target
                })
                .min_by_key(|&j| (distance(j), j))
        });
        match hit {
            Some(j) => {
                consumed[j] = true;
                tokens = crate::text::substitute_token(&tokens, j, &restored)
                    .unwrap_or_else(|_| replace_raw(&tokens, j, &restored));
                replaced.push(Some(j));
            }
            None => {
                misses.push(miss(MissReason::NotFound));
                replaced.push(None);
            }
        }
    }

    DecodeResult {
        y_pri: Layout::new(y_pub).render(&tokens),
        misses,
        replaced,
    }
}

/// Fallback for restored translations that are not a single word token
/// (e.g. multi-word dictionary targets): written verbatim.
fn replace_raw(tokens: &crate::text::TaggedText, index: usize, text: &str) -> crate::text::TaggedText {
    let shape = tokens.tokens()[index].case_shape();
    let mut i = 0;
    tokens.map_surfaces(|t| {
        let out = if i == index {
            shape.apply(text)
        } else {
            t.surface().to_string()
        };
        i += 1;
        out
    })
}
