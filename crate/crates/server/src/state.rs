//! In-memory session store. Each session sits behind its own mutex so
//! patches and evaluations on one session are serialized while different
//! sessions proceed in parallel.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::http::StatusCode;
use cloudsel::ahp::GoalHierarchy;
use cloudsel::catalog::{Catalog, CatalogDocument};
use cloudsel::codes::ErrorCode;
use cloudsel::evaluation::CombinationWeights;
use cloudsel::requirements::Requirement;
use cloudsel::session::{run_session, Mode, RelaxationPolicy, ResultDocument, SessionDocument};
use serde::{Deserialize, Serialize};

use crate::wire::ApiError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub catalog_id: String,
}

/// Partial session document. Absent fields keep their current value;
/// `add_requirements` appends to the (possibly replaced) requirement list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<RelaxationPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combination: Option<CombinationWeights>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deselected: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requirements: Option<Vec<Requirement>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub add_requirements: Vec<Requirement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_hierarchy: Option<GoalHierarchy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_hierarchy: Option<GoalHierarchy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrated_hierarchy: Option<GoalHierarchy>,
}

impl SessionPatch {
    pub fn apply(self, doc: &SessionDocument) -> SessionDocument {
        let mut next = doc.clone();
        if let Some(v) = self.mode {
            next.mode = v;
        }
        if let Some(v) = self.relaxation {
            next.relaxation = v;
        }
        if let Some(v) = self.combination {
            next.combination = v;
        }
        if let Some(v) = self.deselected {
            next.deselected = v;
        }
        if let Some(v) = self.requirements {
            next.requirements = v;
        }
        next.requirements.extend(self.add_requirements);
        if let Some(v) = self.image_hierarchy {
            next.image_hierarchy = v;
        }
        if let Some(v) = self.service_hierarchy {
            next.service_hierarchy = v;
        }
        if self.integrated_hierarchy.is_some() {
            next.integrated_hierarchy = self.integrated_hierarchy;
        }
        next
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub catalog_id: String,
    pub revision: u64,
    /// Revisions that have a stored result, ascending.
    pub evaluated_revisions: Vec<u64>,
    pub session: SessionDocument,
}

/// A result together with the session revision it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub session_id: String,
    pub revision: u64,
    /// The session has been modified since this result was computed.
    pub stale: bool,
    pub result: ResultDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogList {
    pub catalogs: Vec<String>,
}

/// On-disk form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SessionSnapshot {
    id: String,
    catalog_id: String,
    revision: u64,
    session: SessionDocument,
}

#[derive(Debug)]
struct SessionState {
    id: String,
    catalog_id: String,
    revision: u64,
    document: SessionDocument,
    results: BTreeMap<u64, ResultDocument>,
}

impl SessionState {
    fn view(&self) -> SessionView {
        SessionView {
            id: self.id.clone(),
            catalog_id: self.catalog_id.clone(),
            revision: self.revision,
            evaluated_revisions: self.results.keys().copied().collect(),
            session: self.document.clone(),
        }
    }

    fn envelope(&self, revision: u64, result: &ResultDocument) -> ResultEnvelope {
        ResultEnvelope { session_id: self.id.clone(), revision, stale: revision < self.revision, result: result.clone() }
    }
}

pub struct AppState {
    catalogs: BTreeMap<String, Arc<Catalog>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionState>>>>,
    next_id: AtomicU64,
    snapshot_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(catalogs: BTreeMap<String, Catalog>) -> Self {
        Self {
            catalogs: catalogs.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            snapshot_dir: None,
        }
    }

    /// Serves only the bundled demo catalog, under the id `demo`.
    pub fn with_demo() -> Self {
        Self::new(BTreeMap::from([("demo".to_string(), cloudsel::demo::catalog())]))
    }

    /// Persists every session mutation to `<dir>/<session id>.toml` and
    /// restores sessions already present there. Stored results are not persisted.
    pub fn with_snapshot_dir(mut self, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut highest = 0;
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("toml") {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let snap: SessionSnapshot = toml::from_str(&text)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
            if !self.catalogs.contains_key(&snap.catalog_id) {
                continue;
            }
            if let Some(n) = snap.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                highest = highest.max(n);
            }
            let state = SessionState {
                id: snap.id.clone(),
                catalog_id: snap.catalog_id,
                revision: snap.revision,
                document: snap.session,
                results: BTreeMap::new(),
            };
            self.sessions.get_mut().expect("lock not shared yet").insert(snap.id, Arc::new(Mutex::new(state)));
        }
        self.next_id = AtomicU64::new(highest + 1);
        self.snapshot_dir = Some(dir);
        Ok(self)
    }

    pub fn catalog_ids(&self) -> CatalogList {
        CatalogList { catalogs: self.catalogs.keys().cloned().collect() }
    }

    pub fn catalog_document(&self, id: &str) -> Result<CatalogDocument, ApiError> {
        Ok(self.catalog(id)?.to_document())
    }

    fn catalog(&self, id: &str) -> Result<&Arc<Catalog>, ApiError> {
        self.catalogs.get(id).ok_or_else(|| ApiError::not_found(format!("unknown catalog `{id}`")))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionState>>, ApiError> {
        self.sessions
            .read()
            .expect("session map lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
    }

    fn persist(&self, state: &SessionState, document: &SessionDocument, revision: u64) -> Result<(), ApiError> {
        let Some(dir) = &self.snapshot_dir else { return Ok(()) };
        let snap = SessionSnapshot {
            id: state.id.clone(),
            catalog_id: state.catalog_id.clone(),
            revision,
            session: document.clone(),
        };
        let text = toml::to_string_pretty(&snap).expect("snapshots always serialize");
        write_atomically(&dir.join(format!("{}.toml", state.id)), &text).map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Input, format!("failed to write snapshot: {e}"))
        })
    }

    pub fn create_session(&self, req: CreateSession) -> Result<SessionView, ApiError> {
        self.catalog(&req.catalog_id)?;
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let state = SessionState {
            id: id.clone(),
            catalog_id: req.catalog_id,
            revision: 0,
            document: SessionDocument::default(),
            results: BTreeMap::new(),
        };
        self.persist(&state, &state.document, state.revision)?;
        let view = state.view();
        self.sessions.write().expect("session map lock poisoned").insert(id, Arc::new(Mutex::new(state)));
        Ok(view)
    }

    pub fn session_view(&self, id: &str) -> Result<SessionView, ApiError> {
        let session = self.session(id)?;
        let guard = session.lock().expect("session lock poisoned");
        Ok(guard.view())
    }

    /// Applies the patch if the resulting document validates against the
    /// session's catalog; otherwise nothing changes.
    pub fn update_session(&self, id: &str, patch: SessionPatch) -> Result<SessionView, ApiError> {
        let session = self.session(id)?;
        let mut guard = session.lock().expect("session lock poisoned");
        let catalog = self.catalog(&guard.catalog_id)?;
        let next = patch.apply(&guard.document);
        next.validate(catalog).map_err(|e| ApiError::validation(e.to_string()))?;
        let revision = guard.revision + 1;
        self.persist(&guard, &next, revision)?;
        guard.document = next;
        guard.revision = revision;
        Ok(guard.view())
    }

    /// Evaluates the current revision and stores the result under it.
    pub fn evaluate(&self, id: &str) -> Result<ResultEnvelope, ApiError> {
        let session = self.session(id)?;
        let mut guard = session.lock().expect("session lock poisoned");
        let catalog = self.catalog(&guard.catalog_id)?;
        let result = run_session(catalog, &guard.document).map_err(|e| {
            let code = ErrorCode::from(&e);
            let status = match code {
                ErrorCode::Validation => StatusCode::UNPROCESSABLE_ENTITY,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            };
            ApiError::new(status, code, e.to_string())
        })?;
        let revision = guard.revision;
        let envelope = guard.envelope(revision, &result);
        guard.results.insert(revision, result);
        Ok(envelope)
    }

    pub fn latest_result(&self, id: &str) -> Result<ResultEnvelope, ApiError> {
        let session = self.session(id)?;
        let guard = session.lock().expect("session lock poisoned");
        let (&rev, result) = guard
            .results
            .last_key_value()
            .ok_or_else(|| ApiError::not_found(format!("session `{id}` has not been evaluated")))?;
        Ok(guard.envelope(rev, result))
    }

    pub fn result_at(&self, id: &str, revision: u64) -> Result<ResultEnvelope, ApiError> {
        let session = self.session(id)?;
        let guard = session.lock().expect("session lock poisoned");
        let result = guard
            .results
            .get(&revision)
            .ok_or_else(|| ApiError::not_found(format!("session `{id}` has no result for revision {revision}")))?;
        Ok(guard.envelope(revision, result))
    }
}

fn write_atomically(path: &Path, text: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("toml.tmp");
    fs::write(&tmp, text)?;
    fs::rename(tmp, path)
}
