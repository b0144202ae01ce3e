//! Word-substitution encoders and the matching decoder.
//!
//! An encoder replaces some words of the private text `x_pri` with other
//! dictionary words and returns the public text `x_pub` together with the
//! substitution history, which never leaves the user's machine. After the
//! engine translates `x_pub` into `y_pub`, [`decode`] finds the translation
//! of each substitute in `y_pub` and puts back the translation of the
//! original word.
//!
//! * [`encode_prism_r`] substitutes each word independently with
//!   probability `r`, drawing the substitute uniformly from the dictionary
//!   vocabulary. It is ε-differentially private with
//!   ε = ln((r + |V|(1 − r)) / r), see [`epsilon_for`].
//! * [`encode_prism_star`] substitutes the ⌈r·n⌉ most reliably
//!   translatable words with same-tag high-confidence words. Better quality,
//!   no formal bound.
//! * [`encode_mixed`] picks one of the two per call.

mod decode;
mod exhaustive;
mod pipeline;
mod prism_r;
mod prism_star;
mod privacy;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dictionary::{ConfidenceTable, DictionaryMode, WordDictionary};
use crate::text::{substitute_token, Layout, PosTag, TaggedText, TextError};

pub use decode::{decode, DecodeMiss, DecodeResult, MissReason};
pub use exhaustive::{
    closed_form_probability, dp_ratio_check, encoder_distribution, pair_ratios, DpCheck, MAX_EXHAUSTIVE_LEN,
    MAX_EXHAUSTIVE_OUTPUTS, MAX_EXHAUSTIVE_VOCAB,
};
pub use pipeline::{run_pipeline, DecodeMode, PipelineError, PipelineRun};
pub use prism_r::{encode_forced, encode_prism_r};
pub use prism_star::{encode_prism_star, substitution_target};
pub use privacy::{epsilon_for, ratio_for_epsilon, transition_ratio_bound};

#[derive(Debug, Error, PartialEq)]
pub enum MechanismError {
    #[error("ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
    #[error("beta must lie in [0, 1], got {0}")]
    InvalidBeta(f64),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("vocabulary size must be at least 1")]
    EmptyVocabulary,
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("expected a {expected:?} dictionary, got {found:?}")]
    WrongDictionaryMode {
        expected: DictionaryMode,
        found: DictionaryMode,
    },
    #[error("{called} called with method {method:?}")]
    MethodMismatch { called: &'static str, method: Method },
    #[error("forced substitute {0:?} is not in the dictionary vocabulary")]
    NotInVocabulary(String),
    #[error("duplicate substitution at position {0}")]
    DuplicatePosition(usize),
    #[error("exhaustive enumeration limited to {limit}, got {got}")]
    TooLarge { limit: String, got: String },
    #[error("text {0:?} contains words outside the vocabulary")]
    OutsideVocabulary(Vec<String>),
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PrismR,
    PrismStar,
    Mixed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::PrismR => "prism-r",
            Method::PrismStar => "prism-star",
            Method::Mixed => "mixed",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "prism-r" | "r" => Ok(Method::PrismR),
            "prism-star" | "prism*" | "star" => Ok(Method::PrismStar),
            "mixed" => Ok(Method::Mixed),
            other => Err(format!(
                "unknown method {other:?} (expected prism-r, prism-star or mixed)"
            )),
        }
    }
}

/// Validated encoder parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismParams {
    method: Method,
    ratio: f64,
    beta: f64,
    seed: u64,
}

impl MechanismParams {
    pub fn new(method: Method, ratio: f64, seed: u64) -> Result<MechanismParams, MechanismError> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(MechanismError::InvalidRatio(ratio));
        }
        Ok(MechanismParams {
            method,
            ratio,
            beta: 0.0,
            seed,
        })
    }

    pub fn prism_r(ratio: f64, seed: u64) -> Result<MechanismParams, MechanismError> {
        Self::new(Method::PrismR, ratio, seed)
    }

    pub fn prism_star(ratio: f64) -> Result<MechanismParams, MechanismError> {
        Self::new(Method::PrismStar, ratio, 0)
    }

    pub fn mixed(ratio: f64, beta: f64, seed: u64) -> Result<MechanismParams, MechanismError> {
        Self::new(Method::Mixed, ratio, seed)?.with_beta(beta)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<MechanismParams, MechanismError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(MechanismError::InvalidBeta(beta));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> MechanismParams {
        self.seed = seed;
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// One replaced word. `tag` is set by the POS-guided encoder only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionRecord {
    pub position: usize,
    pub original: String,
    pub substitute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<PosTag>,
}

/// The user-side secret needed to decode. Positions are token indices in
/// the private text.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubstitutionHistory {
    pub records: Vec<SubstitutionRecord>,
    /// Token count of the private text.
    pub source_len: usize,
}

impl SubstitutionHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SubstitutionRecord> {
        self.records.iter()
    }
}

/// Which encoder actually produced an [`EncodeResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    PrismR,
    PrismStar,
}

/// Set on mixed-mechanism results. No single ε is claimed for the mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureInfo {
    pub beta: f64,
    /// ε of the randomized component alone.
    pub epsilon_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EncodeWarning {
    /// No word of the text has a dictionary entry under its tag.
    NoCandidates,
    /// Fewer substitutions than ⌈r·n⌉ were possible.
    InsufficientCandidates { requested: usize, made: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeResult {
    pub x_pub: String,
    pub history: SubstitutionHistory,
    /// Differential-privacy bound, only for the randomized encoder.
    pub epsilon: Option<f64>,
    pub branch: Branch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<EncodeWarning>,
}

/// The plain dictionary for the randomized encoder, the POS-keyed one and
/// its confidence table for the guided encoder.
#[derive(Debug, Clone)]
pub struct DictionarySet {
    pub plain: WordDictionary,
    pub pos_keyed: WordDictionary,
    pub confidence: ConfidenceTable,
}

impl DictionarySet {
    pub fn new(plain: WordDictionary, pos_keyed: WordDictionary) -> DictionarySet {
        let confidence = ConfidenceTable::from_dictionary(&pos_keyed);
        DictionarySet {
            plain,
            pos_keyed,
            confidence,
        }
    }

    /// Dictionary to decode a result of the given branch with.
    pub fn for_branch(&self, branch: Branch) -> &WordDictionary {
        match branch {
            Branch::PrismR => &self.plain,
            Branch::PrismStar => &self.pos_keyed,
        }
    }
}

/// Write `subs` (token index, new lowercase word) into `text`, keeping its
/// whitespace and each replaced token's case shape.
pub(crate) fn render_substituted(
    text: &str,
    tokens: &TaggedText,
    subs: &[(usize, String)],
) -> Result<(String, Vec<SubstitutionRecord>), MechanismError> {
    let mut out = tokens.clone();
    let mut records = Vec::with_capacity(subs.len());
    let mut seen = std::collections::HashSet::new();
    for (position, word) in subs {
        if !seen.insert(*position) {
            return Err(MechanismError::DuplicatePosition(*position));
        }
        out = substitute_token(&out, *position, word)?;
        records.push(SubstitutionRecord {
            position: *position,
            original: tokens.tokens()[*position].surface().to_string(),
            substitute: out.tokens()[*position].surface().to_string(),
            tag: None,
        });
    }
    Ok((Layout::new(text).render(&out), records))
}

const BRANCH_STREAM: u64 = 0x6d_6978_6564;

/// With probability β the guided encoder, otherwise the randomized one. The
/// branch coin comes from its own RNG stream, so with β = 0 the result is
/// exactly `encode_prism_r` under the same seed.
pub fn encode_mixed(
    text: &str,
    dicts: &DictionarySet,
    tagger: &crate::text::Tagger,
    params: &MechanismParams,
) -> Result<EncodeResult, MechanismError> {
    use rand::{Rng, SeedableRng};

    if params.method != Method::Mixed {
        return Err(MechanismError::MethodMismatch {
            called: "encode_mixed",
            method: params.method,
        });
    }
    let epsilon_r = epsilon_for(params.ratio, dicts.plain.vocab_size().max(1))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(BRANCH_STREAM);
    let coin: f64 = rng.random();

    let mut result = if coin < params.beta {
        prism_star::encode(text, &dicts.pos_keyed, &dicts.confidence, tagger, params.ratio)?
    } else {
        prism_r::encode(text, &dicts.plain, params.ratio, params.seed)?
    };
    result.mixture = Some(MixtureInfo {
        beta: params.beta,
        epsilon_r,
    });
    Ok(result)
}

/// Dispatch on `params.method`.
pub fn encode(
    text: &str,
    dicts: &DictionarySet,
    tagger: &crate::text::Tagger,
    params: &MechanismParams,
) -> Result<EncodeResult, MechanismError> {
    match params.method {
        Method::PrismR => encode_prism_r(text, &dicts.plain, params),
        Method::PrismStar => encode_prism_star(text, &dicts.pos_keyed, &dicts.confidence, tagger, params),
        Method::Mixed => encode_mixed(text, dicts, tagger, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert_eq!(MechanismParams::prism_r(0.0, 1), Err(MechanismError::InvalidRatio(0.0)));
        assert_eq!(MechanismParams::prism_r(1.0, 1), Err(MechanismError::InvalidRatio(1.0)));
        assert_eq!(MechanismParams::prism_r(1.5, 1), Err(MechanismError::InvalidRatio(1.5)));
        assert!(MechanismParams::prism_r(f64::NAN, 1).is_err());
        assert!(MechanismParams::prism_r(1e-9, 1).is_ok());
        assert_eq!(
            MechanismParams::mixed(0.5, 1.1, 1),
            Err(MechanismError::InvalidBeta(1.1))
        );
        assert_eq!(MechanismParams::mixed(0.5, 1.0, 1).unwrap().beta(), 1.0);
    }

    #[test]
    fn method_names() {
        for m in [Method::PrismR, Method::PrismStar, Method::Mixed] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("PRISM*".parse::<Method>().unwrap(), Method::PrismStar);
        assert!("pup".parse::<Method>().is_err());
    }
}
