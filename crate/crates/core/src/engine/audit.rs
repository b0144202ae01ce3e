use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Hex SHA-256 of the exact outbound text.
pub fn payload_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditOutcome {
    Ok,
    Failed,
}

/// One outbound call. Serialized as a single NDJSON line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub timestamp: DateTime<Utc>,
    pub engine_id: String,
    pub payload_hash: String,
    /// Length in characters.
    pub payload_len: usize,
    pub outcome: AuditOutcome,
}

#[derive(Default)]
struct Inner {
    records: Vec<AuditRecord>,
    sink: Option<File>,
}

/// Append-only, shared record of everything sent to an engine.
#[derive(Clone, Default)]
pub struct AuditLog {
    inner: Arc<Mutex<Inner>>,
}

impl AuditLog {
    pub fn in_memory() -> AuditLog {
        AuditLog::default()
    }

    /// Also append every record to `path` as NDJSON.
    pub fn with_file(path: impl AsRef<Path>) -> io::Result<AuditLog> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(AuditLog {
            inner: Arc::new(Mutex::new(Inner {
                records: Vec::new(),
                sink: Some(file),
            })),
        })
    }

    pub fn append(&self, engine_id: &str, payload: &str, outcome: AuditOutcome) -> io::Result<()> {
        let record = AuditRecord {
            timestamp: Utc::now(),
            engine_id: engine_id.to_string(),
            payload_hash: payload_digest(payload),
            payload_len: payload.chars().count(),
            outcome,
        };
        let mut inner = self.inner.lock().expect("audit lock poisoned");
        if let Some(sink) = inner.sink.as_mut() {
            let line = serde_json::to_string(&record).map_err(io::Error::other)?;
            writeln!(sink, "{line}")?;
        }
        inner.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        self.inner.lock().expect("audit lock poisoned").records.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("audit lock poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn read_ndjson(path: impl AsRef<Path>) -> io::Result<Vec<AuditRecord>> {
        let reader = BufReader::new(File::open(path)?);
        let mut out = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
        }
        Ok(out)
    }
}

impl std::fmt::Debug for AuditLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AuditLog").field("records", &self.len()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_sha256_hex() {
        assert_eq!(
            payload_digest("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn ndjson_sink_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.ndjson");
        let log = AuditLog::with_file(&path).unwrap();
        log.append("e1", "héllo", AuditOutcome::Ok).unwrap();
        log.append("e2", "x", AuditOutcome::Failed).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().next().unwrap().contains("\"timestamp\":\""));
        let read = AuditLog::read_ndjson(&path).unwrap();
        assert_eq!(read, log.records());
        assert_eq!(read[0].payload_len, 5);
    }
}
