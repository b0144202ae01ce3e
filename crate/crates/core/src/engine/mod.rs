//! Black-box translators and the outbound audit log.
//!
//! Every call that leaves the process goes through [`EngineRegistry`], which
//! appends exactly one [`AuditRecord`] per call, successful or not.

mod audit;
mod mock;
mod remote;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audit::{payload_digest, AuditLog, AuditOutcome, AuditRecord};
pub use mock::{MockLexicon, Passthrough};
pub use remote::{language_name, FieldMapping, RemoteConfig, RemoteEngine, TRANSLATION_PROMPT};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown engine {0:?}")]
    UnknownEngine(String),
    #[error("engine id {0:?} is already registered")]
    DuplicateId(String),
    #[error("invalid engine descriptor {id:?}: {message}")]
    InvalidDescriptor { id: String, message: String },
    #[error("engine {0:?} refused empty text")]
    EmptyText(String),
    #[error("engine {engine:?} has no translation for {word:?}")]
    UnknownWord { engine: String, word: String },
    #[error("transport failure calling engine {engine:?} after {attempts} attempt(s): {message}")]
    Transport {
        engine: String,
        attempts: u32,
        message: String,
    },
    #[error("protocol error from engine {engine:?}: {message}")]
    Protocol { engine: String, message: String },
    #[error("mock lexicon: {0}")]
    Lexicon(String),
    #[error("audit log: {0}")]
    Audit(#[from] std::io::Error),
}

impl EngineError {
    /// Transport failures may succeed on a later attempt.
    pub fn is_retryable(&self) -> bool {
        matches!(self, EngineError::Transport { .. })
    }
}

/// Anything that turns source text into target text.
pub trait Translator: Send + Sync {
    fn translate(&self, text: &str) -> Result<String, EngineError>;
}

impl<T: Translator + ?Sized> Translator for Arc<T> {
    fn translate(&self, text: &str) -> Result<String, EngineError> {
        (**self).translate(text)
    }
}

impl<T: Translator + ?Sized> Translator for &T {
    fn translate(&self, text: &str) -> Result<String, EngineError> {
        (**self).translate(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Mock,
    Remote,
}

/// A configured translator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineDescriptor {
    pub id: String,
    pub kind: EngineKind,
    pub source_lang: String,
    pub target_lang: String,
    /// Mock only: `source<TAB>target` lexicon file. The bundled en→fr
    /// lexicon is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    /// Remote only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<RemoteConfig>,
}

impl EngineDescriptor {
    pub fn mock(id: &str, source_lang: &str, target_lang: &str) -> EngineDescriptor {
        EngineDescriptor {
            id: id.to_string(),
            kind: EngineKind::Mock,
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
            lexicon: None,
            endpoint: None,
        }
    }

    pub fn remote(id: &str, source_lang: &str, target_lang: &str, endpoint: RemoteConfig) -> EngineDescriptor {
        EngineDescriptor {
            id: id.to_string(),
            kind: EngineKind::Remote,
            source_lang: source_lang.to_string(),
            target_lang: target_lang.to_string(),
            lexicon: None,
            endpoint: Some(endpoint),
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let invalid = |message: &str| EngineError::InvalidDescriptor {
            id: self.id.clone(),
            message: message.to_string(),
        };
        if self.id.trim().is_empty() {
            return Err(invalid("id must not be empty"));
        }
        if self.source_lang.trim().is_empty() || self.target_lang.trim().is_empty() {
            return Err(invalid("language codes must not be empty"));
        }
        if self.source_lang.eq_ignore_ascii_case(&self.target_lang) {
            return Err(invalid("source and target language must differ"));
        }
        if self.kind == EngineKind::Remote && self.endpoint.is_none() {
            return Err(invalid("remote engines require endpoint settings"));
        }
        Ok(())
    }

    fn build_backend(&self) -> Result<Arc<dyn Translator>, EngineError> {
        match self.kind {
            EngineKind::Mock => {
                let lexicon = match &self.lexicon {
                    Some(path) => MockLexicon::load(path)?,
                    None => MockLexicon::fixture(),
                };
                Ok(Arc::new(lexicon.with_engine_id(&self.id)))
            }
            EngineKind::Remote => {
                let endpoint = self.endpoint.clone().expect("validated");
                Ok(Arc::new(RemoteEngine::new(
                    &self.id,
                    &self.source_lang,
                    &self.target_lang,
                    endpoint,
                )))
            }
        }
    }
}

/// `[[engines]]` table of descriptors, usually read from TOML.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RegistryConfig {
    #[serde(default)]
    pub engines: Vec<EngineDescriptor>,
}

impl RegistryConfig {
    /// Parse a TOML registry. Relative lexicon paths resolve against
    /// `base_dir`.
    pub fn from_toml(source: &str, base_dir: Option<&Path>) -> Result<RegistryConfig, EngineError> {
        let mut config: RegistryConfig = toml::from_str(source).map_err(|e| EngineError::InvalidDescriptor {
            id: String::new(),
            message: e.to_string(),
        })?;
        if let Some(base) = base_dir {
            for engine in &mut config.engines {
                if let Some(path) = engine.lexicon.as_mut() {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
            }
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RegistryConfig, EngineError> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path)?;
        Self::from_toml(&source, path.parent())
    }
}

struct Registered {
    descriptor: EngineDescriptor,
    backend: Arc<dyn Translator>,
}

/// Engines by id, sharing one audit log.
pub struct EngineRegistry {
    engines: BTreeMap<String, Registered>,
    audit: AuditLog,
}

impl EngineRegistry {
    pub fn new(audit: AuditLog) -> EngineRegistry {
        EngineRegistry {
            engines: BTreeMap::new(),
            audit,
        }
    }

    /// Registry holding only the bundled `mock-en-fr` engine.
    pub fn with_fixture_mock(audit: AuditLog) -> EngineRegistry {
        let mut registry = EngineRegistry::new(audit);
        registry
            .register(EngineDescriptor::mock("mock-en-fr", "en", "fr"))
            .expect("fixture descriptor is valid");
        registry
    }

    pub fn from_config(config: &RegistryConfig, audit: AuditLog) -> Result<EngineRegistry, EngineError> {
        let mut registry = EngineRegistry::new(audit);
        for descriptor in &config.engines {
            registry.register(descriptor.clone())?;
        }
        Ok(registry)
    }

    pub fn register(&mut self, descriptor: EngineDescriptor) -> Result<String, EngineError> {
        descriptor.validate()?;
        let backend = descriptor.build_backend()?;
        self.register_with(descriptor, backend)
    }

    /// Register a descriptor backed by a caller-supplied translator.
    pub fn register_with(
        &mut self,
        descriptor: EngineDescriptor,
        backend: Arc<dyn Translator>,
    ) -> Result<String, EngineError> {
        descriptor.validate()?;
        if self.engines.contains_key(&descriptor.id) {
            return Err(EngineError::DuplicateId(descriptor.id));
        }
        let id = descriptor.id.clone();
        self.engines.insert(id.clone(), Registered { descriptor, backend });
        Ok(id)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &EngineDescriptor> {
        self.engines.values().map(|r| &r.descriptor)
    }

    pub fn descriptor(&self, id: &str) -> Result<&EngineDescriptor, EngineError> {
        self.engines
            .get(id)
            .map(|r| &r.descriptor)
            .ok_or_else(|| EngineError::UnknownEngine(id.to_string()))
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    /// Send `text` to engine `id`. Appends one audit record whatever the
    /// outcome.
    pub fn translate(&self, id: &str, text: &str) -> Result<String, EngineError> {
        let registered = self
            .engines
            .get(id)
            .ok_or_else(|| EngineError::UnknownEngine(id.to_string()))?;
        if text.trim().is_empty() {
            return Err(EngineError::EmptyText(id.to_string()));
        }
        let result = registered.backend.translate(text);
        let outcome = match &result {
            Ok(_) => AuditOutcome::Ok,
            Err(_) => AuditOutcome::Failed,
        };
        self.audit.append(id, text, outcome)?;
        result
    }

    /// A [`Translator`] view of one engine that still audits every call.
    pub fn engine(&self, id: &str) -> Result<AuditedEngine<'_>, EngineError> {
        self.descriptor(id)?;
        Ok(AuditedEngine {
            registry: self,
            id: id.to_string(),
        })
    }
}

pub struct AuditedEngine<'a> {
    registry: &'a EngineRegistry,
    id: String,
}

impl AuditedEngine<'_> {
    pub fn id(&self) -> &str {
        &self.id
    }
}

impl Translator for AuditedEngine<'_> {
    fn translate(&self, text: &str) -> Result<String, EngineError> {
        self.registry.translate(&self.id, text)
    }
}
