use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    epsilon_for, render_substituted, Branch, EncodeResult, MechanismError, MechanismParams, Method, SubstitutionHistory,
};
use crate::dictionary::WordDictionary;
use crate::text::tokenize;

/// Randomized substitution.
///
/// Every word token consumes one coin and one vocabulary index from a
/// ChaCha8 stream seeded with `params.seed`, in token order, whether or not
/// it ends up replaced. A fixed seed therefore replaces a superset of the
/// positions as `r` grows.
pub fn encode_prism_r(
    text: &str,
    dict: &WordDictionary,
    params: &MechanismParams,
) -> Result<EncodeResult, MechanismError> {
    if params.method() != Method::PrismR {
        return Err(MechanismError::MethodMismatch {
            called: "encode_prism_r",
            method: params.method(),
        });
    }
    encode(text, dict, params.ratio(), params.seed())
}

pub(super) fn encode(text: &str, dict: &WordDictionary, r: f64, seed: u64) -> Result<EncodeResult, MechanismError> {
    let vocab = dict.source_words();
    if vocab.is_empty() {
        return Err(MechanismError::EmptyDictionary);
    }
    let epsilon = epsilon_for(r, vocab.len())?;
    let tokens = tokenize(text);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subs = Vec::new();
    for position in tokens.word_positions() {
        let coin: f64 = rng.random();
        let pick = rng.random_range(0..vocab.len());
        if coin < r {
            subs.push((position, vocab[pick].to_string()));
        }
    }

    let (x_pub, records) = render_substituted(text, &tokens, &subs)?;
    Ok(EncodeResult {
        x_pub,
        history: SubstitutionHistory {
            records,
            source_len: tokens.len(),
        },
        epsilon: Some(epsilon),
        branch: Branch::PrismR,
        mixture: None,
        warning: None,
    })
}

/// A randomized-encoder output with the draws fixed by the caller:
/// `(token index, substitute)` pairs. Useful to replay a specific outcome.
/// No ε is reported since nothing was sampled.
pub fn encode_forced(
    text: &str,
    dict: &WordDictionary,
    substitutions: &[(usize, &str)],
) -> Result<EncodeResult, MechanismError> {
    if dict.is_empty() {
        return Err(MechanismError::EmptyDictionary);
    }
    let tokens = tokenize(text);
    let mut subs = Vec::with_capacity(substitutions.len());
    for &(position, word) in substitutions {
        let word = word.to_lowercase();
        if !dict.contains_word(&word) {
            return Err(MechanismError::NotInVocabulary(word));
        }
        subs.push((position, word));
    }
    subs.sort_by_key(|(p, _)| *p);
    let (x_pub, records) = render_substituted(text, &tokens, &subs)?;
    Ok(EncodeResult {
        x_pub,
        history: SubstitutionHistory {
            records,
            source_len: tokens.len(),
        },
        epsilon: None,
        branch: Branch::PrismR,
        mixture: None,
        warning: None,
    })
}
