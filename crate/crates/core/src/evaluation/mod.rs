//! Privacy and quality scoring on a synthetic reading-comprehension corpus.
//!
//! The privacy-preserving score (PPS) is how often an evaluator fails to
//! answer a question from the public text alone; the quality score (QS) is
//! how often it succeeds from the decoded translation. Sweeping a
//! mechanism's ratio traces a curve whose area ([`aupqc`]) summarizes the
//! trade-off.

mod corpus;
mod metrics;
mod sweep;

use thiserror::Error;

use crate::engine::EngineError;
use crate::mechanisms::{MechanismError, PipelineError};

pub use corpus::{
    generate_synthetic_corpus, split_sentences, Document, Label, QaItem, SyntheticCorpus, ANIMALS, COLORS, NAMES,
    OBJECTS, PLACES,
};
pub use metrics::{aupqc, qs_at, CurveReport, QsAt, TradeoffCurve, TradeoffPoint};
pub use sweep::{
    default_grid, document_seed, evaluate_point, oracle_evaluate, pps, qs, sweep, EvalContext, Evaluator,
    GoldEvaluator, MechanismKind, OracleEvaluator, PointScores,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corpus has no documents or questions")]
    EmptyCorpus,
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("curve has no points")]
    EmptyCurve,
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<PipelineError> for EvalError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Mechanism(e) => EvalError::Mechanism(e),
            PipelineError::Engine(e) => EvalError::Engine(e),
        }
    }
}
