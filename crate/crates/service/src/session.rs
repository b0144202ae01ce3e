//! User-side sessions: the private text, its substitution history and the
//! translations, held in memory and advanced through a fixed sequence of
//! states. Only [`Service::send`] reaches an engine.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use chrono::{DateTime, Utc};
use prism_core::dictionary::WordDictionary;
use prism_core::engine::{AuditRecord, EngineDescriptor, EngineRegistry};
use prism_core::mechanisms::{
    decode, encode, Branch, DecodeMiss, DictionarySet, EncodeResult, EncodeWarning, MechanismParams, Method,
    MixtureInfo, SubstitutionHistory, SubstitutionRecord,
};
use prism_core::text::Tagger;
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Drafted,
    Encoded,
    Sent,
    Decoded,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionState::Drafted => "drafted",
            SessionState::Encoded => "encoded",
            SessionState::Sent => "sent",
            SessionState::Decoded => "decoded",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub x_pri: String,
    pub params: Option<MechanismParams>,
    pub encoded: Option<EncodeResult>,
    pub engine: Option<String>,
    pub y_pub: Option<String>,
    pub y_pri: Option<String>,
    pub misses: Vec<DecodeMiss>,
    pub state: SessionState,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeRequest {
    pub method: Method,
    pub ratio: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Mixed method only.
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub x_pub: String,
    pub substitutions: Vec<SubstitutionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub branch: Branch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<EncodeWarning>,
}

impl From<&EncodeResult> for EncodeResponse {
    fn from(r: &EncodeResult) -> Self {
        EncodeResponse {
            x_pub: r.x_pub.clone(),
            substitutions: r.history.records.clone(),
            epsilon: r.epsilon,
            branch: r.branch,
            mixture: r.mixture,
            warning: r.warning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SendResponse {
    pub y_pub: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResponse {
    pub y_pri: String,
    pub misses: Vec<DecodeMiss>,
}

/// What `GET /v1/sessions/{id}` shows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub state: SessionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoded: Option<EncodeResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_pub: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_pri: Option<String>,
}

/// Everything about a session, as written to the session directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionExport {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub state: SessionState,
    pub x_pri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<MechanismParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_pub: Option<String>,
    pub history: SubstitutionHistory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_pub: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_pri: Option<String>,
    pub misses: Vec<DecodeMiss>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictStats {
    pub entries: usize,
    pub vocab_size: usize,
    pub mode: prism_core::dictionary::DictionaryMode,
}

impl From<&WordDictionary> for DictStats {
    fn from(d: &WordDictionary) -> Self {
        DictStats {
            entries: d.entry_count(),
            vocab_size: d.vocab_size(),
            mode: d.mode(),
        }
    }
}

/// Plain dictionary figures at the top level, the POS-keyed ones nested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictStatsResponse {
    #[serde(flatten)]
    pub plain: DictStats,
    pub pos_keyed: DictStats,
}

fn lock(session: &Mutex<Session>) -> MutexGuard<'_, Session> {
    session.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// Sessions plus the engines and dictionaries they use.
pub struct Service {
    registry: EngineRegistry,
    dicts: DictionarySet,
    tagger: Tagger,
    seed: u64,
    session_dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Service {
    pub fn new(
        registry: EngineRegistry,
        dicts: DictionarySet,
        tagger: Tagger,
        seed: u64,
        session_dir: PathBuf,
    ) -> Service {
        Service {
            registry,
            dicts,
            tagger,
            seed,
            session_dir,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn from_config(config: &ServiceConfig) -> Result<Service, ServiceError> {
        let registry = config.engines(config.audit()?)?;
        Ok(Service::new(
            registry,
            config.dictionaries()?,
            config.tagger()?,
            config.seed,
            config.session_dir.clone(),
        ))
    }

    pub fn registry(&self) -> &EngineRegistry {
        &self.registry
    }

    pub fn dictionaries(&self) -> &DictionarySet {
        &self.dicts
    }

    pub fn tagger(&self) -> &Tagger {
        &self.tagger
    }

    pub fn default_seed(&self) -> u64 {
        self.seed
    }

    pub fn session_dir(&self) -> &Path {
        &self.session_dir
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        let sessions = self.sessions.read().unwrap_or_else(|p| p.into_inner());
        sessions
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn create_session(&self, text: &str) -> Result<String, ServiceError> {
        if text.trim().is_empty() {
            return Err(ServiceError::Invalid("text must not be empty".into()));
        }
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session {
            id: id.clone(),
            created_at: Utc::now(),
            x_pri: text.to_string(),
            params: None,
            encoded: None,
            engine: None,
            y_pub: None,
            y_pri: None,
            misses: Vec::new(),
            state: SessionState::Drafted,
        };
        let mut sessions = self.sessions.write().unwrap_or_else(|p| p.into_inner());
        sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn delete_session(&self, id: &str) -> Result<(), ServiceError> {
        let mut sessions = self.sessions.write().unwrap_or_else(|p| p.into_inner());
        sessions
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn view(&self, id: &str) -> Result<SessionView, ServiceError> {
        let session = self.session(id)?;
        let s = lock(&session);
        Ok(SessionView {
            session_id: s.id.clone(),
            created_at: s.created_at,
            state: s.state,
            encoded: s.encoded.as_ref().map(EncodeResponse::from),
            engine: s.engine.clone(),
            y_pub: s.y_pub.clone(),
            y_pri: s.y_pri.clone(),
        })
    }

    /// Encode the private text, replacing any earlier draft.
    pub fn encode(&self, id: &str, request: &EncodeRequest) -> Result<EncodeResponse, ServiceError> {
        let params = self.params_for(request)?;
        let session = self.session(id)?;
        let mut s = lock(&session);
        if s.state > SessionState::Encoded {
            return Err(ServiceError::Conflict {
                state: s.state,
                action: "encode",
            });
        }
        let result = encode(&s.x_pri, &self.dicts, &self.tagger, &params)?;
        let response = EncodeResponse::from(&result);
        s.params = Some(params);
        s.encoded = Some(result);
        s.state = SessionState::Encoded;
        Ok(response)
    }

    fn params_for(&self, request: &EncodeRequest) -> Result<MechanismParams, ServiceError> {
        let seed = request.seed.unwrap_or(self.seed);
        let params = match (request.method, request.beta) {
            (Method::Mixed, Some(beta)) => MechanismParams::mixed(request.ratio, beta, seed)?,
            (Method::Mixed, None) => return Err(ServiceError::Invalid("the mixed method needs beta".into())),
            (method, None) => MechanismParams::new(method, request.ratio, seed)?,
            (method, Some(_)) => {
                return Err(ServiceError::Invalid(format!(
                    "beta only applies to mixed, not {}",
                    method.as_str()
                )))
            }
        };
        Ok(params)
    }

    /// Translate the public text with engine `engine`. The session stays
    /// encoded when the engine fails, so sending can be retried.
    pub fn send(&self, id: &str, engine: &str) -> Result<SendResponse, ServiceError> {
        let session = self.session(id)?;
        let mut s = lock(&session);
        if s.state != SessionState::Encoded {
            return Err(ServiceError::Conflict {
                state: s.state,
                action: "send",
            });
        }
        self.registry.descriptor(engine)?;
        let x_pub = &s.encoded.as_ref().expect("encoded state has a result").x_pub;
        let y_pub = self.registry.translate(engine, x_pub)?;
        s.engine = Some(engine.to_string());
        s.y_pub = Some(y_pub.clone());
        s.state = SessionState::Sent;
        Ok(SendResponse { y_pub })
    }

    pub fn decode(&self, id: &str) -> Result<DecodeResponse, ServiceError> {
        let session = self.session(id)?;
        let mut s = lock(&session);
        if s.state != SessionState::Sent {
            return Err(ServiceError::Conflict {
                state: s.state,
                action: "decode",
            });
        }
        let encoded = s.encoded.as_ref().expect("sent state has a result");
        let y_pub = s.y_pub.as_deref().expect("sent state has a translation");
        let result = decode(y_pub, &encoded.history, self.dicts.for_branch(encoded.branch));
        s.y_pri = Some(result.y_pri.clone());
        s.misses = result.misses.clone();
        s.state = SessionState::Decoded;
        Ok(DecodeResponse {
            y_pri: result.y_pri,
            misses: result.misses,
        })
    }

    pub fn export_data(&self, id: &str) -> Result<SessionExport, ServiceError> {
        let session = self.session(id)?;
        let s = lock(&session);
        Ok(SessionExport {
            session_id: s.id.clone(),
            created_at: s.created_at,
            state: s.state,
            x_pri: s.x_pri.clone(),
            params: s.params,
            x_pub: s.encoded.as_ref().map(|e| e.x_pub.clone()),
            history: s.encoded.as_ref().map(|e| e.history.clone()).unwrap_or_default(),
            engine: s.engine.clone(),
            y_pub: s.y_pub.clone(),
            y_pri: s.y_pri.clone(),
            misses: s.misses.clone(),
        })
    }

    /// Write the session to `<session_dir>/<id>.json`.
    pub fn export(&self, id: &str) -> Result<PathBuf, ServiceError> {
        let data = self.export_data(id)?;
        std::fs::create_dir_all(&self.session_dir)
            .map_err(|e| ServiceError::io(format!("creating {}", self.session_dir.display()), e))?;
        let path = self.session_dir.join(format!("{}.json", data.session_id));
        let json = serde_json::to_string_pretty(&data).expect("session serializes");
        std::fs::write(&path, json + "\n").map_err(|e| ServiceError::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }

    pub fn engines(&self) -> Vec<EngineDescriptor> {
        self.registry.descriptors().cloned().collect()
    }

    pub fn dict_stats(&self) -> DictStatsResponse {
        DictStatsResponse {
            plain: DictStats::from(&self.dicts.plain),
            pos_keyed: DictStats::from(&self.dicts.pos_keyed),
        }
    }

    pub fn audit_records(&self) -> Vec<AuditRecord> {
        self.registry.audit().records()
    }
}
