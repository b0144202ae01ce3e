use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use prism_core::dictionary::{load_dictionary, DictionaryMode};
use prism_core::engine::{AuditLog, EngineRegistry, RegistryConfig};
use prism_core::fixtures;
use prism_core::mechanisms::DictionarySet;
use prism_core::text::{PosLexicon, Tagger};
use serde::Deserialize;

use crate::ServiceError;

pub const CONFIG_ENV: &str = "PRISM_CONFIG";
pub const SEED_ENV: &str = "PRISM_SEED";

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8787))
}

fn default_session_dir() -> PathBuf {
    PathBuf::from("sessions")
}

/// Dictionary files. Both default to the bundled lexicon dictionaries.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryPaths {
    pub plain: Option<PathBuf>,
    pub pos_keyed: Option<PathBuf>,
    /// `word<TAB>tag` file for the tagger.
    pub pos_lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_session_dir")]
    pub session_dir: PathBuf,
    /// NDJSON audit file. In memory only when absent.
    #[serde(default)]
    pub audit_log: Option<PathBuf>,
    #[serde(default)]
    pub dictionary: DictionaryPaths,
    /// Filled from the `[[engines]]` tables. The bundled mock is used when
    /// there are none.
    #[serde(skip)]
    pub registry: RegistryConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: default_bind(),
            seed: 0,
            session_dir: default_session_dir(),
            audit_log: None,
            dictionary: DictionaryPaths::default(),
            registry: RegistryConfig::default(),
        }
    }
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl ServiceConfig {
    /// Parse TOML. Relative paths resolve against `base_dir`.
    pub fn from_toml(source: &str, base_dir: Option<&Path>) -> Result<ServiceConfig, ServiceError> {
        let mut config: ServiceConfig = toml::from_str(source).map_err(|e| ServiceError::Config(e.to_string()))?;
        config.registry = RegistryConfig::from_toml(source, base_dir)?;
        if let Some(base) = base_dir {
            resolve(base, &mut config.session_dir);
            for path in [
                config.audit_log.as_mut(),
                config.dictionary.plain.as_mut(),
                config.dictionary.pos_keyed.as_mut(),
                config.dictionary.pos_lexicon.as_mut(),
            ]
            .into_iter()
            .flatten()
            {
                resolve(base, path);
            }
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ServiceConfig, ServiceError> {
        let path = path.as_ref();
        let source = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&source, path.parent())
    }

    /// The file named by `explicit`, else by `PRISM_CONFIG`, else defaults.
    /// A `PRISM_SEED` value replaces the configured seed.
    pub fn discover(explicit: Option<&Path>) -> Result<ServiceConfig, ServiceError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut config = match explicit.map(Path::to_path_buf).or(from_env) {
            Some(path) => Self::load(path)?,
            None => ServiceConfig::default(),
        };
        if let Ok(seed) = std::env::var(SEED_ENV) {
            config.seed = seed
                .trim()
                .parse()
                .map_err(|_| ServiceError::Config(format!("{SEED_ENV}={seed:?} is not an unsigned integer")))?;
        }
        Ok(config)
    }

    pub fn tagger(&self) -> Result<Tagger, ServiceError> {
        Ok(match &self.dictionary.pos_lexicon {
            Some(path) => Tagger::new(PosLexicon::load(path)?),
            None => Tagger::fixture(),
        })
    }

    pub fn dictionaries(&self) -> Result<DictionarySet, ServiceError> {
        let plain = match &self.dictionary.plain {
            Some(path) => load_dictionary(path)?.0,
            None => fixtures::lexicon_dictionary(DictionaryMode::Plain),
        };
        let pos_keyed = match &self.dictionary.pos_keyed {
            Some(path) => load_dictionary(path)?.0,
            None => fixtures::lexicon_dictionary(DictionaryMode::PosKeyed),
        };
        if plain.mode() != DictionaryMode::Plain && !plain.is_empty() {
            return Err(ServiceError::Config(
                "dictionary.plain holds a POS-keyed dictionary".into(),
            ));
        }
        if pos_keyed.mode() != DictionaryMode::PosKeyed && !pos_keyed.is_empty() {
            return Err(ServiceError::Config(
                "dictionary.pos_keyed holds a plain dictionary".into(),
            ));
        }
        Ok(DictionarySet::new(plain, pos_keyed))
    }

    pub fn audit(&self) -> Result<AuditLog, ServiceError> {
        Ok(match &self.audit_log {
            Some(path) => {
                AuditLog::with_file(path).map_err(|e| ServiceError::io(format!("opening {}", path.display()), e))?
            }
            None => AuditLog::in_memory(),
        })
    }

    pub fn engines(&self, audit: AuditLog) -> Result<EngineRegistry, ServiceError> {
        if self.registry.engines.is_empty() {
            return Ok(EngineRegistry::with_fixture_mock(audit));
        }
        Ok(EngineRegistry::from_config(&self.registry, audit)?)
    }
}
