//! Versioned, append-only session persistence.
//!
//! Layout under the data directory:
//!
//! ```text
//! sessions/<id>/session.json   metadata and version index
//! sessions/<id>/v<k>.json      one immutable record per version
//! blobs/<sha256>               artifact code, content-addressed
//! ```
//!
//! Rollback appends a new version; history is never rewritten.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diff_engine::{compute_diff, render_changelog, SemanticDiff};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::generation_engine::{GeneratedArtifact, PromptDoc};
use crate::relation_engine::RelationGraph;
use crate::semantic_model::{from_canonical_json, to_canonical_json, SemanticState};

pub const BUNDLE_FORMAT: &str = "suif-session-bundle/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionRecord {
    pub version: u64,
    pub state: SemanticState,
    pub artifact: Option<GeneratedArtifact>,
    pub graph: Option<RelationGraph>,
    pub diff_from_parent: Option<SemanticDiff>,
    pub label: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub version: u64,
    pub label: String,
    pub changelog: Vec<String>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    id: String,
    name: String,
    created_at: DateTime<Utc>,
    versions: Vec<Arc<VersionRecord>>,
}

/// What a commit attaches besides the state.
#[derive(Debug, Clone, Default)]
pub struct Attachments {
    pub artifact: Option<GeneratedArtifact>,
    pub graph: Option<RelationGraph>,
}

impl Session {
    fn new(id: String, name: &str) -> Result<Self> {
        if name.trim().is_empty() {
            return Err(Error::EmptyName);
        }
        let now = Utc::now();
        Ok(Self {
            id,
            name: name.to_string(),
            created_at: now,
            versions: vec![Arc::new(VersionRecord {
                version: 0,
                state: SemanticState::new(),
                artifact: None,
                graph: None,
                diff_from_parent: None,
                label: "created".into(),
                created_at: now,
            })],
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn created_at(&self) -> DateTime<Utc> {
        self.created_at
    }

    pub fn versions(&self) -> &[Arc<VersionRecord>] {
        &self.versions
    }

    pub fn current_version(&self) -> u64 {
        self.versions.len() as u64 - 1
    }

    pub fn current(&self) -> &VersionRecord {
        self.versions.last().expect("sessions always hold version 0")
    }

    pub fn current_state(&self) -> &SemanticState {
        &self.current().state
    }

    pub fn record(&self, version: u64) -> Result<&VersionRecord> {
        self.versions
            .get(version as usize)
            .map(Arc::as_ref)
            .ok_or(Error::UnknownVersion(version))
    }

    /// Most recent artifact at or before the current version.
    pub fn current_artifact(&self) -> Option<&GeneratedArtifact> {
        self.versions.iter().rev().find_map(|r| r.artifact.as_ref())
    }

    pub fn current_graph(&self) -> Option<&RelationGraph> {
        self.versions.iter().rev().find_map(|r| r.graph.as_ref())
    }

    /// The record a commit would append, without appending it.
    pub fn next_record(&self, state: SemanticState, attach: Attachments, label: &str) -> Result<VersionRecord> {
        let current = self.current();
        if state == current.state && attach.artifact.is_none() && attach.graph.is_none() {
            return Err(Error::NoChange);
        }
        Ok(VersionRecord {
            version: self.current_version() + 1,
            diff_from_parent: Some(compute_diff(&current.state, &state)),
            state,
            artifact: attach.artifact,
            graph: attach.graph,
            label: label.to_string(),
            created_at: Utc::now(),
        })
    }

    /// The record a rollback to `version` would append.
    pub fn rollback_record(&self, version: u64) -> Result<VersionRecord> {
        let target = self.record(version)?;
        self.next_record(target.state.clone(), Attachments::default(), &format!("rollback to v{version}"))
    }

    pub fn history(&self) -> Vec<HistoryRow> {
        self.versions
            .iter()
            .map(|r| HistoryRow {
                version: r.version,
                label: r.label.clone(),
                changelog: r
                    .diff_from_parent
                    .as_ref()
                    .map(render_changelog)
                    .unwrap_or_default(),
                created_at: r.created_at,
            })
            .collect()
    }
}

// ---- on-disk forms -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredArtifact {
    artifact_id: String,
    code_blob: String,
    prompt: PromptDoc,
    produced_from_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StoredRecord {
    version: u64,
    label: String,
    created_at: DateTime<Utc>,
    state: SemanticState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    artifact: Option<StoredArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    graph: Option<RelationGraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diff_from_parent: Option<SemanticDiff>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexEntry {
    version: u64,
    label: String,
    file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredSession {
    id: String,
    name: String,
    created_at: DateTime<Utc>,
    current_version: u64,
    versions: Vec<IndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Bundle {
    format: String,
    id: String,
    name: String,
    created_at: DateTime<Utc>,
    records: Vec<StoredRecord>,
    blobs: BTreeMap<String, String>,
}

fn blob_key(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn to_stored(record: &VersionRecord) -> StoredRecord {
    StoredRecord {
        version: record.version,
        label: record.label.clone(),
        created_at: record.created_at,
        state: record.state.clone(),
        artifact: record.artifact.as_ref().map(|a| StoredArtifact {
            artifact_id: a.artifact_id.clone(),
            code_blob: blob_key(a.code.as_bytes()),
            prompt: a.prompt.clone(),
            produced_from_version: a.produced_from_version,
        }),
        graph: record.graph.clone(),
        diff_from_parent: record.diff_from_parent.clone(),
    }
}

/// File-backed store. Mutations on one session are serialized by a
/// per-session lock; distinct sessions proceed independently.
#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    open: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for dir in [root.join("sessions"), root.join("blobs")] {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(Self {
            root,
            open: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(id)
    }

    fn blob_path(&self, key: &str) -> PathBuf {
        self.root.join("blobs").join(key)
    }

    fn write_blob(&self, bytes: &[u8]) -> Result<String> {
        let key = blob_key(bytes);
        let path = self.blob_path(&key);
        if !path.exists() {
            write_atomic(&path, bytes)?;
        }
        Ok(key)
    }

    fn read_blob(&self, key: &str) -> Result<String> {
        let path = self.blob_path(key);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        String::from_utf8(bytes).map_err(|e| Error::MalformedDocument {
            line: 0,
            column: 0,
            message: format!("blob {key} is not UTF-8: {e}"),
        })
    }

    fn write_record(&self, id: &str, record: &VersionRecord) -> Result<()> {
        if let Some(a) = &record.artifact {
            self.write_blob(a.code.as_bytes())?;
        }
        let path = self.session_dir(id).join(format!("v{}.json", record.version));
        write_atomic(&path, &to_canonical_json(&to_stored(record)))
    }

    fn write_index(&self, session: &Session) -> Result<()> {
        let stored = StoredSession {
            id: session.id.clone(),
            name: session.name.clone(),
            created_at: session.created_at,
            current_version: session.current_version(),
            versions: session
                .versions
                .iter()
                .map(|r| IndexEntry {
                    version: r.version,
                    label: r.label.clone(),
                    file: format!("v{}.json", r.version),
                })
                .collect(),
        };
        write_atomic(&self.session_dir(&session.id).join("session.json"), &to_canonical_json(&stored))
    }

    fn load_record(&self, id: &str, file: &str) -> Result<VersionRecord> {
        let path = self.session_dir(id).join(file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let stored: StoredRecord = from_canonical_json(&bytes)?;
        let artifact = match stored.artifact {
            Some(a) => Some(GeneratedArtifact {
                code: self.read_blob(&a.code_blob)?,
                artifact_id: a.artifact_id,
                prompt: a.prompt,
                produced_from_version: a.produced_from_version,
            }),
            None => None,
        };
        Ok(VersionRecord {
            version: stored.version,
            state: stored.state,
            artifact,
            graph: stored.graph,
            diff_from_parent: stored.diff_from_parent,
            label: stored.label,
            created_at: stored.created_at,
        })
    }

    fn load_from_disk(&self, id: &str) -> Result<Session> {
        let path = self.session_dir(id).join("session.json");
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::UnknownSession(id.to_string()))
            }
            Err(e) => return Err(Error::io(path, e)),
        };
        let stored: StoredSession = from_canonical_json(&bytes)?;
        let versions = stored
            .versions
            .iter()
            .map(|entry| self.load_record(id, &entry.file).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(Session {
            id: stored.id,
            name: stored.name,
            created_at: stored.created_at,
            versions,
        })
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        if !valid_id(id) {
            return Err(Error::UnknownSession(id.to_string()));
        }
        let mut open = self.open.lock().unwrap();
        if let Some(h) = open.get(id) {
            return Ok(h.clone());
        }
        let session = self.load_from_disk(id)?;
        let handle = Arc::new(Mutex::new(session));
        open.insert(id.to_string(), handle.clone());
        Ok(handle)
    }

    fn persist_new(&self, session: Session) -> Result<Session> {
        let dir = self.session_dir(&session.id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for record in &session.versions {
            self.write_record(&session.id, record)?;
        }
        self.write_index(&session)?;
        self.open
            .lock()
            .unwrap()
            .insert(session.id.clone(), Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn create_session(&self, name: &str) -> Result<Session> {
        let session = Session::new(uuid::Uuid::new_v4().to_string(), name)?;
        self.persist_new(session)
    }

    /// Creates a session under a caller-chosen id (letters, digits, `-`, `_`).
    pub fn create_session_with_id(&self, id: &str, name: &str) -> Result<Session> {
        if !valid_id(id) {
            return Err(Error::InvalidRequest(format!("invalid session id `{id}`")));
        }
        if self.exists(id) {
            return Err(Error::InvalidRequest(format!("session `{id}` already exists")));
        }
        self.persist_new(Session::new(id.to_string(), name)?)
    }

    pub fn exists(&self, id: &str) -> bool {
        valid_id(id) && self.session_dir(id).join("session.json").exists()
    }

    /// A snapshot of the session. Records are shared, not copied.
    pub fn load(&self, id: &str) -> Result<Session> {
        Ok(self.handle(id)?.lock().unwrap().clone())
    }

    /// Atomically reads the current session and appends the record `build`
    /// returns. Other mutations of the same session wait.
    pub fn update<F>(&self, id: &str, build: F) -> Result<Arc<VersionRecord>>
    where
        F: FnOnce(&Session) -> Result<VersionRecord>,
    {
        let handle = self.handle(id)?;
        let mut session = handle.lock().unwrap();
        let record = build(&session)?;
        debug_assert_eq!(record.version, session.current_version() + 1);
        self.write_record(id, &record)?;
        let record = Arc::new(record);
        session.versions.push(record.clone());
        self.write_index(&session)?;
        Ok(record)
    }

    pub fn commit(
        &self,
        id: &str,
        state: SemanticState,
        attach: Attachments,
        label: &str,
    ) -> Result<Arc<VersionRecord>> {
        self.update(id, |s| s.next_record(state, attach, label))
    }

    pub fn rollback(&self, id: &str, version: u64) -> Result<Arc<VersionRecord>> {
        self.update(id, |s| s.rollback_record(version))
    }

    pub fn history(&self, id: &str) -> Result<Vec<HistoryRow>> {
        Ok(self.load(id)?.history())
    }

    /// Ids of every session on disk, sorted.
    pub fn list(&self) -> Result<Vec<String>> {
        let dir = self.root.join("sessions");
        let mut ids: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|id| self.exists(id))
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// The whole session as one canonical JSON document.
    pub fn export_bundle(&self, id: &str) -> Result<Vec<u8>> {
        let session = self.load(id)?;
        let records: Vec<StoredRecord> = session.versions.iter().map(|r| to_stored(r)).collect();
        let blobs = session
            .versions
            .iter()
            .filter_map(|r| r.artifact.as_ref())
            .map(|a| (blob_key(a.code.as_bytes()), a.code.clone()))
            .collect();
        Ok(to_canonical_json(&Bundle {
            format: BUNDLE_FORMAT.into(),
            id: session.id.clone(),
            name: session.name.clone(),
            created_at: session.created_at,
            records,
            blobs,
        }))
    }

    pub fn export_session(&self, id: &str, out_path: &Path) -> Result<()> {
        let bytes = self.export_bundle(id)?;
        write_atomic(out_path, &bytes)
    }

    /// Imports a bundle. Keeps the bundled id unless it is taken, in which
    /// case a fresh id is assigned. Returns the id used.
    pub fn import_bundle(&self, bytes: &[u8]) -> Result<String> {
        let bundle: Bundle = from_canonical_json(bytes)?;
        if bundle.format != BUNDLE_FORMAT {
            return Err(Error::InvalidRequest(format!("unsupported bundle format `{}`", bundle.format)));
        }
        let mut versions = Vec::with_capacity(bundle.records.len());
        for (i, stored) in bundle.records.into_iter().enumerate() {
            if stored.version != i as u64 {
                return Err(Error::InvalidRequest(format!(
                    "bundle record {i} carries version {}",
                    stored.version
                )));
            }
            let artifact = match stored.artifact {
                Some(a) => {
                    let code = bundle.blobs.get(&a.code_blob).cloned().ok_or_else(|| {
                        Error::InvalidRequest(format!("bundle lacks blob {}", a.code_blob))
                    })?;
                    if blob_key(code.as_bytes()) != a.code_blob {
                        return Err(Error::InvalidRequest(format!("blob {} is corrupt", a.code_blob)));
                    }
                    Some(GeneratedArtifact {
                        artifact_id: a.artifact_id,
                        code,
                        prompt: a.prompt,
                        produced_from_version: a.produced_from_version,
                    })
                }
                None => None,
            };
            versions.push(Arc::new(VersionRecord {
                version: stored.version,
                state: stored.state,
                artifact,
                graph: stored.graph,
                diff_from_parent: stored.diff_from_parent,
                label: stored.label,
                created_at: stored.created_at,
            }));
        }
        if versions.is_empty() {
            return Err(Error::InvalidRequest("bundle has no records".into()));
        }
        let id = if valid_id(&bundle.id) && !self.exists(&bundle.id) {
            bundle.id
        } else {
            uuid::Uuid::new_v4().to_string()
        };
        let session = Session {
            id: id.clone(),
            name: bundle.name,
            created_at: bundle.created_at,
            versions,
        };
        self.persist_new(session)?;
        Ok(id)
    }

    pub fn import_session(&self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.import_bundle(&bytes)
    }

    /// Raw bytes of a committed record file.
    pub fn record_bytes(&self, id: &str, version: u64) -> Result<Vec<u8>> {
        let path = self.session_dir(id).join(format!("v{version}.json"));
        fs::read(&path).map_err(|e| Error::io(path, e))
    }
}
