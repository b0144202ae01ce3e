use prism_core::dictionary::DictionaryError;
use prism_core::engine::EngineError;
use prism_core::evaluation::EvalError;
use prism_core::mechanisms::{MechanismError, PipelineError};
use prism_core::text::TextError;
use thiserror::Error;

use crate::session::SessionState;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown session {0:?}")]
    NotFound(String),
    #[error("cannot {action} a session in state {state}")]
    Conflict { state: SessionState, action: &'static str },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Eval(EvalError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl ServiceError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> ServiceError {
        ServiceError::Io {
            context: context.into(),
            source,
        }
    }

    /// Failures of a translator, as opposed to bad input or configuration.
    pub fn is_engine_failure(&self) -> bool {
        let engine = match self {
            ServiceError::Engine(e) | ServiceError::Eval(EvalError::Engine(e)) => e,
            ServiceError::Dictionary(DictionaryError::Engine { source: e, .. }) => e,
            _ => return false,
        };
        matches!(
            engine,
            EngineError::Transport { .. } | EngineError::Protocol { .. } | EngineError::UnknownWord { .. }
        )
    }

    /// Process exit status: 2 for engine or transport trouble, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        if self.is_engine_failure() {
            2
        } else {
            1
        }
    }
}

impl From<PipelineError> for ServiceError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Mechanism(e) => e.into(),
            PipelineError::Engine(e) => e.into(),
        }
    }
}

impl From<EvalError> for ServiceError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::Mechanism(e) => e.into(),
            other => ServiceError::Eval(other),
        }
    }
}
