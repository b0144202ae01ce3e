use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{decode, encode, DecodeResult, DictionarySet, EncodeResult, MechanismError, MechanismParams};
use crate::engine::{EngineError, Translator};
use crate::text::Tagger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    #[default]
    Decode,
    /// Return the engine output as is (the no-decode baseline).
    Skip,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub encoded: EncodeResult,
    pub y_pub: String,
    pub decoded: DecodeResult,
}

impl PipelineRun {
    pub fn y_pri(&self) -> &str {
        &self.decoded.y_pri
    }
}

/// Encode, send only `x_pub` to `engine`, then decode (or not).
pub fn run_pipeline(
    text: &str,
    dicts: &DictionarySet,
    tagger: &Tagger,
    params: &MechanismParams,
    engine: &dyn Translator,
    mode: DecodeMode,
) -> Result<PipelineRun, PipelineError> {
    let encoded = encode(text, dicts, tagger, params)?;
    let y_pub = engine.translate(&encoded.x_pub)?;
    let decoded = match mode {
        DecodeMode::Decode => decode(&y_pub, &encoded.history, dicts.for_branch(encoded.branch)),
        DecodeMode::Skip => DecodeResult {
            y_pri: y_pub.clone(),
            misses: Vec::new(),
            replaced: Vec::new(),
        },
    };
    Ok(PipelineRun {
        encoded,
        y_pub,
        decoded,
    })
}
