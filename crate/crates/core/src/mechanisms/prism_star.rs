use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use super::{
    render_substituted, Branch, EncodeResult, EncodeWarning, MechanismError, MechanismParams, Method,
    SubstitutionHistory,
};
use crate::dictionary::{ConfidenceTable, DictKey, DictionaryMode, WordDictionary};
use crate::text::{tokenize, PosTag, Tagger};

/// ⌈r·n⌉, with a little slack so that e.g. 0.3·10 counts as 3.
pub fn substitution_target(r: f64, n: usize) -> usize {
    ((r * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Confidence-guided substitution.
///
/// Words that have an entry under their own tag are visited from highest
/// to lowest confidence (earlier position first on ties). Each is replaced
/// by the not-yet-used same-tag word of highest confidence other than
/// itself (alphabetical on ties) until ⌈r·n⌉ words have been replaced,
/// where `n` counts word tokens. Deterministic; `params.seed` is unused.
pub fn encode_prism_star(
    text: &str,
    dict: &WordDictionary,
    conf: &ConfidenceTable,
    tagger: &Tagger,
    params: &MechanismParams,
) -> Result<EncodeResult, MechanismError> {
    if params.method() != Method::PrismStar {
        return Err(MechanismError::MethodMismatch {
            called: "encode_prism_star",
            method: params.method(),
        });
    }
    encode(text, dict, conf, tagger, params.ratio())
}

fn by_confidence(a: &(f64, String), b: &(f64, String)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1))
}

pub(super) fn encode(
    text: &str,
    dict: &WordDictionary,
    conf: &ConfidenceTable,
    tagger: &Tagger,
    r: f64,
) -> Result<EncodeResult, MechanismError> {
    if dict.mode() != DictionaryMode::PosKeyed {
        return Err(MechanismError::WrongDictionaryMode {
            expected: DictionaryMode::PosKeyed,
            found: dict.mode(),
        });
    }
    let tokens = tagger.tag(tokenize(text));
    let n = tokens.word_count();
    let target = substitution_target(r, n);

    let confidence = |key: &DictKey| conf.get(key).unwrap_or(0.0);
    let mut candidates: Vec<(f64, usize, DictKey)> = tokens
        .word_positions()
        .into_iter()
        .filter_map(|i| {
            let key = DictKey::tagged(tokens.tokens()[i].surface(), tokens.tags()[i]);
            dict.list(&key).map(|_| (confidence(&key), i, key))
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut pools: BTreeMap<PosTag, Vec<(f64, String)>> = BTreeMap::new();
    for key in dict.keys() {
        if let Some(tag) = key.tag {
            pools.entry(tag).or_default().push((confidence(key), key.word.clone()));
        }
    }
    for pool in pools.values_mut() {
        pool.sort_by(by_confidence);
    }

    let mut used: HashSet<String> = HashSet::new();
    let mut subs = Vec::new();
    let mut tags = Vec::new();
    for (_, position, key) in &candidates {
        if subs.len() >= target {
            break;
        }
        let tag = key.tag.expect("tagged key");
        let Some(pool) = pools.get(&tag) else { continue };
        let Some((_, u)) = pool.iter().find(|(_, u)| *u != key.word && !used.contains(u)) else {
            continue;
        };
        used.insert(u.clone());
        subs.push((*position, u.clone()));
        tags.push(tag);
    }

    let warning = if candidates.is_empty() {
        Some(EncodeWarning::NoCandidates)
    } else if subs.len() < target {
        Some(EncodeWarning::InsufficientCandidates {
            requested: target,
            made: subs.len(),
        })
    } else {
        None
    };

    let (x_pub, mut records) = render_substituted(text, &tokens, &subs)?;
    for (record, tag) in records.iter_mut().zip(tags) {
        record.tag = Some(tag);
    }
    Ok(EncodeResult {
        x_pub,
        history: SubstitutionHistory {
            records,
            source_len: tokens.len(),
        },
        epsilon: None,
        branch: Branch::PrismStar,
        mixture: None,
        warning,
    })
}
