//! File-backed persistence: one JSON file per session and per dataset under
//! a data directory. Every write goes to a temporary file that is renamed
//! over the target, so readers never see a partial file.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;
use xlint_core::attribution::{parse_json, to_json};
use xlint_core::evaluate::Verdict;
use xlint_core::grammar::RenderedInsight;
use xlint_core::insight::SlotStatus;
use xlint_core::mapper::MappingResult;
use xlint_core::vis::VisSpec;
use xlint_core::{Table, TableError};
use xlint_extract::{ExtractionTrace, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightRecord {
    pub text: String,
    pub source: Source,
    /// Insight document; open slots hold `null`.
    pub structured: Value,
    pub slots: Vec<SlotStatus>,
    pub rendered: RenderedInsight,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub dataset_id: String,
    pub current_spec: VisSpec,
    pub insights: Vec<InsightRecord>,
    /// Extraction traces by id, failed extractions included.
    #[serde(default)]
    pub traces: BTreeMap<String, ExtractionTrace>,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub updated_at: u64,
}

impl Session {
    pub fn new(dataset_id: impl Into<String>, current_spec: VisSpec) -> Self {
        let now = now_millis();
        Self {
            id: uuid::Uuid::new_v4().simple().to_string(),
            dataset_id: dataset_id.into(),
            current_spec,
            insights: Vec::new(),
            traces: BTreeMap::new(),
            created_at: now,
            updated_at: now,
        }
    }

    pub fn add_trace(&mut self, trace: ExtractionTrace) -> String {
        let id = format!("t{}", self.traces.len() + 1);
        self.traces.insert(id.clone(), trace);
        id
    }

    pub fn touch(&mut self) {
        self.updated_at = now_millis().max(self.updated_at);
    }
}

pub fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure: {0}")]
    Io(#[from] io::Error),
    #[error("stored file {path} is corrupt: {message}")]
    Corrupt { path: String, message: String },
    #[error(transparent)]
    Table(#[from] TableError),
}

pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

/// Ids become file names, so only plain tokens are accepted.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    let mut file = fs::File::create(&tmp)?;
    file.write_all(bytes)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path)
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("datasets"))?;
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Self {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dataset_path(&self, id: &str) -> PathBuf {
        self.root.join("datasets").join(format!("{id}.json"))
    }

    pub fn session_path(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{id}.json"))
    }

    /// Stores a table under the hash of its canonical JSON form; storing the
    /// same table twice yields the same id.
    pub fn put_dataset(&self, table: &Table) -> Result<String, StoreError> {
        let text = to_json(table);
        let id = hex::encode(&Sha256::digest(text.as_bytes())[..8]);
        let path = self.dataset_path(&id);
        if !path.exists() {
            write_atomic(&path, text.as_bytes())?;
        }
        Ok(id)
    }

    pub fn dataset(&self, id: &str) -> Result<Option<Table>, StoreError> {
        if !valid_id(id) {
            return Ok(None);
        }
        match fs::read_to_string(self.dataset_path(id)) {
            Ok(text) => Ok(Some(parse_json(&text)?)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn session(&self, id: &str) -> Result<Option<Session>, StoreError> {
        if !valid_id(id) {
            return Ok(None);
        }
        let path = self.session_path(id);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map(Some).map_err(|e| StoreError::Corrupt {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save_session(&self, session: &Session) -> Result<(), StoreError> {
        let mut bytes = serde_json::to_vec_pretty(session).map_err(io::Error::other)?;
        bytes.push(b'\n');
        write_atomic(&self.session_path(&session.id), &bytes)?;
        Ok(())
    }

    /// Serializes all read-modify-write cycles on one session.
    pub async fn lock(&self, id: &str) -> tokio::sync::OwnedMutexGuard<()> {
        let lock = self
            .locks
            .lock()
            .unwrap()
            .entry(id.to_string())
            .or_default()
            .clone();
        lock.lock_owned().await
    }
}
