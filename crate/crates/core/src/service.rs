//! Operator sessions: describe, retrieve, select, preview, nudge, finalize.
//!
//! ```text
//! Querying --query--> Selecting --preview--> Previewing --adjust--> Previewing
//!                        ^  |                    |  |
//!                        |  +--select (same)     |  +--finalize--> Finalized
//!                        +---- query / select ---+
//! ```
//!
//! Sessions live in memory. Requests on one session are serialized by a
//! per-session lock; the catalog sits behind a readers/writer lock. Locks are
//! always taken session first, catalog second. A failed request leaves the
//! session exactly as it was.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard};

use serde::Serialize;
use thiserror::Error;

use crate::assembly::{Layout, LayoutConstants, LayoutOverride, Slot};
use crate::blending::PlacementMode;
use crate::catalog::{
    validate_query, Assignment, Catalog, CatalogError, ComponentKind, ComponentRecord, FaceDescription, FaceQuery,
    Provenance, RecordId, SchemaError, CANT_SAY,
};
use crate::compose::{compose_records, ComposeError, ComposeOptions};
use crate::imaging::GrayImage;

pub type SessionId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Querying,
    Selecting,
    Previewing,
    Finalized,
}

impl std::fmt::Display for SessionState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SessionState::Querying => "querying",
            SessionState::Selecting => "selecting",
            SessionState::Previewing => "previewing",
            SessionState::Finalized => "finalized",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("schema violation: {0}")]
    SchemaViolation(#[from] SchemaError),
    #[error("unknown record {0}")]
    UnknownRecord(RecordId),
    #[error("record {id} is not a {kind} candidate for this session")]
    NotACandidate { kind: ComponentKind, id: RecordId },
    #[error("cannot {action} while the session is {state}")]
    InvalidState { state: SessionState, action: &'static str },
    #[error("no {0} selected")]
    IncompleteSelection(ComponentKind),
    #[error("composition failed: {0}")]
    Compose(ComposeError),
    #[error("catalog: {0}")]
    Catalog(#[from] CatalogError),
    #[error("internal: {0}")]
    Internal(String),
}

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::SchemaViolation(_) => "SchemaViolation",
            ServiceError::UnknownRecord(_) => "UnknownRecord",
            ServiceError::NotACandidate { .. } => "NotACandidate",
            ServiceError::InvalidState {
                state: SessionState::Finalized,
                ..
            } => "SessionFinalized",
            ServiceError::InvalidState { .. } => "InvalidState",
            ServiceError::IncompleteSelection(_) => "IncompleteSelection",
            ServiceError::Compose(ComposeError::Layout(_)) => "NegativePosition",
            ServiceError::Compose(ComposeError::Placement { .. }) => "OutOfCanvas",
            ServiceError::Compose(_) => "CompositionFailed",
            ServiceError::Catalog(_) | ServiceError::Internal(_) => "Internal",
        }
    }

    /// True when the request itself was at fault.
    pub fn is_caller_fault(&self) -> bool {
        !matches!(self, ServiceError::Catalog(_) | ServiceError::Internal(_))
    }

    pub fn slot(&self) -> Option<Slot> {
        match self {
            ServiceError::Compose(e) => e.slot(),
            _ => None,
        }
    }

    pub fn kind(&self) -> Option<ComponentKind> {
        match self {
            ServiceError::SchemaViolation(e) => Some(e.kind),
            ServiceError::NotACandidate { kind, .. } | ServiceError::IncompleteSelection(kind) => Some(*kind),
            ServiceError::Compose(e) => e.kind(),
            _ => None,
        }
    }

    pub fn attribute(&self) -> Option<&str> {
        match self {
            ServiceError::SchemaViolation(e) => Some(&e.attribute),
            _ => None,
        }
    }
}

impl From<ComposeError> for ServiceError {
    fn from(e: ComposeError) -> Self {
        match e {
            ComposeError::MissingSelection(kind) => ServiceError::IncompleteSelection(kind),
            ComposeError::UnknownRecord(id) => ServiceError::UnknownRecord(id),
            other => ServiceError::Compose(other),
        }
    }
}

/// A retrieved component as shown to the operator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub id: RecordId,
    pub kind: ComponentKind,
    pub attributes: Assignment,
    pub width: usize,
    pub height: usize,
}

impl From<&ComponentRecord> for Candidate {
    fn from(r: &ComponentRecord) -> Self {
        Candidate {
            id: r.id,
            kind: r.kind,
            attributes: r.attributes.clone(),
            width: r.image.cols(),
            height: r.image.rows(),
        }
    }
}

pub type Candidates = BTreeMap<ComponentKind, Vec<Candidate>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preview {
    pub image: GrayImage,
    pub layout: Layout,
    pub mode: PlacementMode,
    pub seam_contrast: u8,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: SessionId,
    pub state: SessionState,
    pub query: FaceQuery,
    pub candidates: BTreeMap<ComponentKind, Vec<RecordId>>,
    pub selections: BTreeMap<ComponentKind, RecordId>,
    pub overrides: LayoutOverride,
    pub mode: PlacementMode,
    pub preview: Option<Preview>,
    pub face_id: Option<RecordId>,
}

impl Session {
    fn new(id: SessionId) -> Self {
        Session {
            id,
            state: SessionState::Querying,
            query: FaceQuery::new(),
            candidates: BTreeMap::new(),
            selections: BTreeMap::new(),
            overrides: LayoutOverride::default(),
            mode: PlacementMode::default(),
            preview: None,
            face_id: None,
        }
    }

    fn ensure_open(&self, action: &'static str) -> Result<(), ServiceError> {
        if self.state == SessionState::Finalized {
            return Err(ServiceError::InvalidState {
                state: self.state,
                action,
            });
        }
        Ok(())
    }

    fn first_missing(&self) -> Option<ComponentKind> {
        ComponentKind::ALL
            .into_iter()
            .find(|k| !self.selections.contains_key(k))
    }
}

/// Shared state behind the HTTP API: the catalog plus live sessions.
#[derive(Debug)]
pub struct Workbench {
    catalog: RwLock<Catalog>,
    sessions: Mutex<HashMap<SessionId, Arc<Mutex<Session>>>>,
    constants: LayoutConstants,
}

impl Workbench {
    pub fn new(catalog: Catalog) -> Self {
        Self::with_constants(catalog, LayoutConstants::default())
    }

    pub fn with_constants(catalog: Catalog, constants: LayoutConstants) -> Self {
        Workbench {
            catalog: RwLock::new(catalog),
            sessions: Mutex::new(HashMap::new()),
            constants,
        }
    }

    pub fn catalog(&self) -> RwLockReadGuard<'_, Catalog> {
        self.catalog.read().unwrap_or_else(|p| p.into_inner())
    }

    pub fn create_session(&self) -> SessionId {
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.lock_sessions()
            .insert(id.clone(), Arc::new(Mutex::new(Session::new(id.clone()))));
        id
    }

    /// Copy of the session's current state.
    pub fn session(&self, id: &str) -> Result<Session, ServiceError> {
        self.with_session(id, |s, _| Ok(s.clone()))
    }

    pub fn submit_query(&self, id: &str, query: FaceQuery) -> Result<Candidates, ServiceError> {
        validate_query(&query)?;
        self.with_session(id, |session, wb| {
            session.ensure_open("submit a query")?;
            let catalog = wb.catalog();
            let empty = Assignment::new();
            let mut found = Candidates::new();
            for kind in ComponentKind::ALL {
                let hits = catalog.match_components(kind, query.get(&kind).unwrap_or(&empty));
                found.insert(kind, hits.into_iter().map(Candidate::from).collect());
            }
            drop(catalog);

            let candidates: BTreeMap<_, Vec<_>> = found
                .iter()
                .map(|(k, v)| (*k, v.iter().map(|c| c.id).collect()))
                .collect();
            session
                .selections
                .retain(|kind, sel| candidates.get(kind).is_some_and(|ids| ids.contains(sel)));
            session.query = query;
            session.candidates = candidates;
            session.preview = None;
            session.state = SessionState::Selecting;
            Ok(found)
        })
    }

    pub fn select_component(
        &self,
        id: &str,
        kind: ComponentKind,
        record: RecordId,
    ) -> Result<BTreeMap<ComponentKind, RecordId>, ServiceError> {
        self.with_session(id, |session, wb| {
            session.ensure_open("select a component")?;
            if session.state == SessionState::Querying {
                return Err(ServiceError::InvalidState {
                    state: session.state,
                    action: "select before querying",
                });
            }
            if wb.catalog().component(record).is_none() {
                return Err(ServiceError::UnknownRecord(record));
            }
            let is_candidate = session.candidates.get(&kind).is_some_and(|ids| ids.contains(&record));
            if !is_candidate {
                return Err(ServiceError::NotACandidate { kind, id: record });
            }
            if session.selections.insert(kind, record) != Some(record) {
                session.preview = None;
                session.state = SessionState::Selecting;
            }
            Ok(session.selections.clone())
        })
    }

    pub fn generate_preview(&self, id: &str, mode: PlacementMode) -> Result<Preview, ServiceError> {
        self.with_session(id, |session, wb| {
            session.ensure_open("generate a preview")?;
            let preview = wb.render(session, session.overrides, mode)?;
            session.mode = mode;
            session.preview = Some(preview.clone());
            session.state = SessionState::Previewing;
            Ok(preview)
        })
    }

    /// Adds `delta` to the session's overrides and re-renders. On failure the
    /// previous overrides and preview stay in place.
    pub fn adjust_placement(&self, id: &str, delta: &LayoutOverride) -> Result<Preview, ServiceError> {
        self.with_session(id, |session, wb| {
            session.ensure_open("adjust placement")?;
            if session.state != SessionState::Previewing {
                return Err(ServiceError::InvalidState {
                    state: session.state,
                    action: "adjust placement without a preview",
                });
            }
            let overrides = session.overrides.then(delta);
            let preview = wb.render(session, overrides, session.mode)?;
            session.overrides = overrides;
            session.preview = Some(preview.clone());
            Ok(preview)
        })
    }

    /// Stores the current preview as a generated face and closes the session.
    pub fn finalize(&self, id: &str) -> Result<RecordId, ServiceError> {
        self.with_session(id, |session, wb| {
            session.ensure_open("finalize")?;
            if let Some(kind) = session.first_missing() {
                return Err(ServiceError::IncompleteSelection(kind));
            }
            let preview = match (&session.preview, session.state) {
                (Some(p), SessionState::Previewing) => p.clone(),
                _ => {
                    return Err(ServiceError::InvalidState {
                        state: session.state,
                        action: "finalize without a preview",
                    })
                }
            };
            let mut catalog = wb.catalog.write().unwrap_or_else(|p| p.into_inner());
            let description = describe(&catalog, session)?;
            let provenance = Provenance {
                sources: session.selections.clone(),
                layout: preview.layout,
                overrides: session.overrides,
                mode: preview.mode,
            };
            let face_id = catalog.save_generated_face(preview.image, description, provenance)?;
            session.face_id = Some(face_id);
            session.state = SessionState::Finalized;
            Ok(face_id)
        })
    }

    fn render(
        &self,
        session: &Session,
        overrides: LayoutOverride,
        mode: PlacementMode,
    ) -> Result<Preview, ServiceError> {
        if let Some(kind) = session.first_missing() {
            return Err(ServiceError::IncompleteSelection(kind));
        }
        let opts = ComposeOptions {
            mode,
            overrides,
            constants: self.constants,
        };
        let composite = compose_records(&self.catalog(), &session.selections, &opts)?;
        Ok(Preview {
            seam_contrast: composite.seam_contrast(),
            image: composite.image,
            layout: composite.layout,
            mode,
        })
    }

    fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session, &Self) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let handle = self
            .lock_sessions()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))?;
        let mut guard = handle.lock().unwrap_or_else(|p| p.into_inner());
        // Work on a copy so a failed request changes nothing.
        let mut draft = guard.clone();
        let out = f(&mut draft, self)?;
        *guard = draft;
        Ok(out)
    }

    fn lock_sessions(&self) -> std::sync::MutexGuard<'_, HashMap<SessionId, Arc<Mutex<Session>>>> {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner())
    }
}

/// The operator's explicit answers, with the selected records' own
/// attributes filling every "Cant Say" or unanswered attribute.
fn describe(catalog: &Catalog, session: &Session) -> Result<FaceDescription, ServiceError> {
    let mut description = FaceDescription::new();
    for kind in ComponentKind::ALL {
        let id = session.selections[&kind];
        let record = catalog.component(id).ok_or(ServiceError::UnknownRecord(id))?;
        let asked = session.query.get(&kind);
        let attrs = kind
            .attributes()
            .iter()
            .map(|def| {
                let value = asked
                    .and_then(|a| a.get(def.name))
                    .filter(|v| v.as_str() != CANT_SAY)
                    .or_else(|| record.attributes.get(def.name))
                    .cloned()
                    .unwrap_or_else(|| CANT_SAY.to_string());
                (def.name.to_string(), value)
            })
            .collect();
        description.insert(kind, attrs);
    }
    Ok(description)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate_catalog, reference_query, FixtureSpec};

    fn bench() -> (tempfile::TempDir, Workbench) {
        let dir = tempfile::tempdir().unwrap();
        generate_catalog(dir.path(), &FixtureSpec::default()).unwrap();
        let wb = Workbench::new(Catalog::open(dir.path()).unwrap());
        (dir, wb)
    }

    fn select_first(wb: &Workbench, sid: &str, found: &Candidates) {
        for (kind, list) in found {
            wb.select_component(sid, *kind, list[0].id).unwrap();
        }
    }

    #[test]
    fn new_sessions_are_distinct_and_empty() {
        let (_d, wb) = bench();
        let a = wb.create_session();
        let b = wb.create_session();
        assert_ne!(a, b);
        let s = wb.session(&a).unwrap();
        assert_eq!(s.state, SessionState::Querying);
        assert!(s.selections.is_empty());
        assert!(matches!(wb.session("nope"), Err(ServiceError::UnknownSession(_))));
    }

    #[test]
    fn wildcard_query_lists_everything() {
        let (_d, wb) = bench();
        let sid = wb.create_session();
        let found = wb.submit_query(&sid, FaceQuery::new()).unwrap();
        let total: usize = found.values().map(Vec::len).sum();
        assert_eq!(total, wb.catalog().components().len());
        assert_eq!(wb.session(&sid).unwrap().state, SessionState::Selecting);
    }

    #[test]
    fn reference_query_finds_every_kind() {
        let (_d, wb) = bench();
        let sid = wb.create_session();
        let found = wb.submit_query(&sid, reference_query()).unwrap();
        for kind in ComponentKind::ALL {
            assert!(!found[&kind].is_empty(), "{kind}");
        }
    }

    #[test]
    fn invalid_query_rejected_without_state_change() {
        let (_d, wb) = bench();
        let sid = wb.create_session();
        let mut q = FaceQuery::new();
        q.insert(
            ComponentKind::RightEye,
            crate::catalog::assignment([("EyeBollColor", "Purple")]),
        );
        let err = wb.submit_query(&sid, q).unwrap_err();
        assert_eq!(err.code(), "SchemaViolation");
        assert_eq!(err.attribute(), Some("EyeBollColor"));
        assert_eq!(wb.session(&sid).unwrap().state, SessionState::Querying);
    }

    #[test]
    fn selection_rules() {
        let (_d, wb) = bench();
        let sid = wb.create_session();
        let mut q = FaceQuery::new();
        q.insert(
            ComponentKind::FaceCutting,
            crate::catalog::assignment([("Sex", "Female")]),
        );
        let found = wb.submit_query(&sid, q).unwrap();
        let female = found[&ComponentKind::FaceCutting][0].id;
        let male = wb
            .catalog()
            .components_of(ComponentKind::FaceCutting)
            .find(|r| r.attributes["Sex"] == "Male")
            .unwrap()
            .id;
        assert!(matches!(
            wb.select_component(&sid, ComponentKind::FaceCutting, male),
            Err(ServiceError::NotACandidate { .. })
        ));
        assert!(matches!(
            wb.select_component(&sid, ComponentKind::FaceCutting, 999_999),
            Err(ServiceError::UnknownRecord(_))
        ));
        let sel = wb.select_component(&sid, ComponentKind::FaceCutting, female).unwrap();
        assert_eq!(sel[&ComponentKind::FaceCutting], female);
        let noses = &found[&ComponentKind::Nose];
        wb.select_component(&sid, ComponentKind::Nose, noses[0].id).unwrap();
        let sel = wb.select_component(&sid, ComponentKind::Nose, noses[1].id).unwrap();
        assert_eq!(sel[&ComponentKind::Nose], noses[1].id);
    }

    #[test]
    fn preview_requires_all_selections() {
        let (_d, wb) = bench();
        let sid = wb.create_session();
        assert!(matches!(
            wb.generate_preview(&sid, PlacementMode::Tuned),
            Err(ServiceError::IncompleteSelection(ComponentKind::FaceCutting))
        ));
        let found = wb.submit_query(&sid, FaceQuery::new()).unwrap();
        for (kind, list) in &found {
            if *kind != ComponentKind::Lip {
                wb.select_component(&sid, *kind, list[0].id).unwrap();
            }
        }
        let err = wb.generate_preview(&sid, PlacementMode::Tuned).unwrap_err();
        assert!(matches!(err, ServiceError::IncompleteSelection(ComponentKind::Lip)));
        assert!(wb.session(&sid).unwrap().preview.is_none());
    }

    #[test]
    fn full_loop() {
        let (_d, wb) = bench();
        let sid = wb.create_session();
        let found = wb.submit_query(&sid, reference_query()).unwrap();
        select_first(&wb, &sid, &found);

        let tuned = wb.generate_preview(&sid, PlacementMode::Tuned).unwrap();
        let again = wb.generate_preview(&sid, PlacementMode::Tuned).unwrap();
        assert_eq!(tuned, again);
        let blind = wb.generate_preview(&sid, PlacementMode::Blind).unwrap();
        assert_ne!(tuned.image, blind.image);
        assert!(tuned.seam_contrast < blind.seam_contrast);
        let tuned = wb.generate_preview(&sid, PlacementMode::Tuned).unwrap();

        let same = wb.adjust_placement(&sid, &LayoutOverride::default()).unwrap();
        assert_eq!(same.image, tuned.image);

        let err = wb
            .adjust_placement(&sid, &LayoutOverride::single(Slot::Lip, 500, 0))
            .unwrap_err();
        assert_eq!(err.code(), "OutOfCanvas");
        assert_eq!(err.slot(), Some(Slot::Lip));
        let kept = wb.session(&sid).unwrap();
        assert_eq!(kept.preview.as_ref().unwrap().image, tuned.image);
        assert!(kept.overrides.is_zero());

        let moved = wb
            .adjust_placement(&sid, &LayoutOverride::single(Slot::Lip, 3, -2))
            .unwrap();
        assert_eq!(moved.layout.positions.lip.row, tuned.layout.positions.lip.row + 3);

        let face = wb.finalize(&sid).unwrap();
        let s = wb.session(&sid).unwrap();
        assert_eq!(s.state, SessionState::Finalized);
        assert_eq!(s.face_id, Some(face));
        let err = wb.finalize(&sid).unwrap_err();
        assert_eq!(err.code(), "SessionFinalized");
        assert!(wb.select_component(&sid, ComponentKind::Lip, 1).is_err());
        assert!(wb.adjust_placement(&sid, &LayoutOverride::default()).is_err());

        let catalog = wb.catalog();
        let hits = catalog.match_faces(&reference_query());
        assert!(hits.iter().any(|f| f.id == face));
        let stored = catalog.face(face).unwrap();
        assert_eq!(stored.image, moved.image);
        assert_eq!(stored.provenance.sources, s.selections);
    }

    #[test]
    fn finalize_needs_preview() {
        let (_d, wb) = bench();
        let sid = wb.create_session();
        assert!(matches!(wb.finalize(&sid), Err(ServiceError::IncompleteSelection(_))));
        let found = wb.submit_query(&sid, FaceQuery::new()).unwrap();
        select_first(&wb, &sid, &found);
        assert_eq!(wb.finalize(&sid).unwrap_err().code(), "InvalidState");
    }

    #[test]
    fn requery_drops_preview_and_stale_selections() {
        let (_d, wb) = bench();
        let sid = wb.create_session();
        let found = wb.submit_query(&sid, FaceQuery::new()).unwrap();
        select_first(&wb, &sid, &found);
        wb.generate_preview(&sid, PlacementMode::Tuned).unwrap();
        let cutting = wb.session(&sid).unwrap().selections[&ComponentKind::FaceCutting];
        let sex = wb.catalog().component(cutting).unwrap().attributes["Sex"].clone();
        let other = if sex == "Male" { "Female" } else { "Male" };
        let mut q = FaceQuery::new();
        q.insert(ComponentKind::FaceCutting, crate::catalog::assignment([("Sex", other)]));
        wb.submit_query(&sid, q).unwrap();
        let s = wb.session(&sid).unwrap();
        assert_eq!(s.state, SessionState::Selecting);
        assert!(s.preview.is_none());
        assert!(!s.selections.contains_key(&ComponentKind::FaceCutting));
        assert_eq!(s.selections.len(), 6);
    }

    #[test]
    fn sessions_are_isolated() {
        let (_d, wb) = bench();
        let a = wb.create_session();
        let b = wb.create_session();
        let found = wb.submit_query(&a, FaceQuery::new()).unwrap();
        select_first(&wb, &a, &found);
        let b_state = wb.session(&b).unwrap();
        assert_eq!(b_state.state, SessionState::Querying);
        assert!(b_state.selections.is_empty());
    }
}
