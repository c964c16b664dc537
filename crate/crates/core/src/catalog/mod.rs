//! Attribute-indexed store of face components and generated faces.
//!
//! On disk a catalog is a directory holding `catalog.toml` plus one PGM per
//! record, grouped in per-kind subdirectories:
//!
//! ```text
//! catalog.toml
//! face_cutting/000001.pgm
//! nose/000006.pgm
//! generated/000029.pgm
//! ```
//!
//! The manifest is rewritten through a temporary file and a rename, so a
//! reader never sees a half-written manifest. Record ids come from a single
//! counter shared by components and generated faces and are never reused.

mod manifest;
mod schema;

pub use schema::{
    assignment, assignment_matches, schema_document, validate_assignment_query, validate_description, validate_query,
    validate_record, value_matches, Assignment, AttributeDef, ComponentKind, FaceDescription, FaceQuery, KindSchema,
    SchemaDocument, SchemaError, SchemaProblem, CANT_SAY, SCHEMA_VERSION,
};

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{ComponentDims, Layout, LayoutOverride};
use crate::blending::PlacementMode;
use crate::imaging::{read_pgm, write_pgm, GrayImage, ImagingError};

pub type RecordId = u64;

pub const MANIFEST_FILE: &str = "catalog.toml";
pub const GENERATED_DIR: &str = "generated";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("schema violation: {0}")]
    SchemaViolation(#[from] SchemaError),
    #[error("image file {0} is missing")]
    MissingImage(PathBuf),
    #[error("malformed image: {0}")]
    MalformedImage(#[from] ImagingError),
    #[error("duplicate record id {0}")]
    DuplicateId(RecordId),
    #[error("unknown record {0}")]
    UnknownRecord(RecordId),
    #[error("record {id} is a {found}, expected a {expected}")]
    WrongKind {
        id: RecordId,
        expected: ComponentKind,
        found: ComponentKind,
    },
    #[error("provenance lacks a {0} source")]
    IncompleteProvenance(ComponentKind),
    #[error("catalog i/o: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentRecord {
    pub id: RecordId,
    pub kind: ComponentKind,
    pub attributes: Assignment,
    pub image: GrayImage,
    /// Relative to the catalog root.
    pub image_path: PathBuf,
}

impl ComponentRecord {
    pub fn dims(&self) -> ComponentDims {
        ComponentDims::of(&self.image)
    }
}

/// How a generated face was put together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: BTreeMap<ComponentKind, RecordId>,
    pub layout: Layout,
    #[serde(default)]
    pub overrides: LayoutOverride,
    pub mode: PlacementMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedFace {
    pub id: RecordId,
    pub image: GrayImage,
    pub image_path: PathBuf,
    pub description: FaceDescription,
    pub provenance: Provenance,
}

#[derive(Debug)]
pub struct Catalog {
    root: PathBuf,
    next_id: RecordId,
    components: Vec<ComponentRecord>,
    faces: Vec<GeneratedFace>,
}

impl Catalog {
    /// Opens the catalog at `root`, creating an empty one when the directory
    /// is missing or has no manifest. Every record is schema-checked and its
    /// image decoded.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let manifest_path = root.join(MANIFEST_FILE);
        if !manifest_path.exists() {
            return Ok(Self {
                root,
                next_id: 1,
                components: Vec::new(),
                faces: Vec::new(),
            });
        }
        let text = fs::read_to_string(&manifest_path)?;
        let doc = manifest::Manifest::parse(&text)?;
        manifest::load(root, doc)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn next_id(&self) -> RecordId {
        self.next_id
    }

    pub fn components(&self) -> &[ComponentRecord] {
        &self.components
    }

    pub fn components_of(&self, kind: ComponentKind) -> impl Iterator<Item = &ComponentRecord> {
        self.components.iter().filter(move |r| r.kind == kind)
    }

    pub fn component(&self, id: RecordId) -> Option<&ComponentRecord> {
        self.components
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.components[i])
    }

    pub fn faces(&self) -> &[GeneratedFace] {
        &self.faces
    }

    pub fn face(&self, id: RecordId) -> Option<&GeneratedFace> {
        self.faces
            .binary_search_by_key(&id, |f| f.id)
            .ok()
            .map(|i| &self.faces[i])
    }

    /// Image of any record, component or generated face.
    pub fn image(&self, id: RecordId) -> Option<&GrayImage> {
        self.component(id)
            .map(|r| &r.image)
            .or_else(|| self.face(id).map(|f| &f.image))
    }

    /// Records of `kind` whose every attribute matches `query`, by ascending
    /// id. The query is assumed schema-valid; see [`Catalog::query`].
    pub fn match_components(&self, kind: ComponentKind, query: &Assignment) -> Vec<&ComponentRecord> {
        self.components_of(kind)
            .filter(|r| assignment_matches(kind, query, &r.attributes))
            .collect()
    }

    /// Validates `query` then matches it.
    pub fn query(&self, kind: ComponentKind, query: &Assignment) -> Result<Vec<&ComponentRecord>, SchemaError> {
        validate_assignment_query(kind, query)?;
        Ok(self.match_components(kind, query))
    }

    /// Generated faces whose stored description matches the query for every kind.
    pub fn match_faces(&self, query: &FaceQuery) -> Vec<&GeneratedFace> {
        let empty = Assignment::new();
        self.faces
            .iter()
            .filter(|face| {
                ComponentKind::ALL.into_iter().all(|kind| {
                    let stored = face.description.get(&kind).unwrap_or(&empty);
                    assignment_matches(kind, query.get(&kind).unwrap_or(&empty), stored)
                })
            })
            .collect()
    }

    /// Stores a component from PGM bytes. The image is kept in canonical PGM
    /// form.
    pub fn ingest(
        &mut self,
        image_bytes: &[u8],
        kind: ComponentKind,
        attributes: Assignment,
    ) -> Result<RecordId, CatalogError> {
        validate_record(kind, &attributes)?;
        let image = read_pgm(image_bytes)?;
        self.ingest_image(image, kind, attributes)
    }

    pub fn ingest_image(
        &mut self,
        image: GrayImage,
        kind: ComponentKind,
        attributes: Assignment,
    ) -> Result<RecordId, CatalogError> {
        validate_record(kind, &attributes)?;
        let id = self.allocate_id()?;
        let image_path = PathBuf::from(kind.dir_name()).join(format!("{id:06}.pgm"));
        self.write_image(&image_path, &image)?;
        self.components.push(ComponentRecord {
            id,
            kind,
            attributes,
            image,
            image_path: image_path.clone(),
        });
        self.next_id = id + 1;
        if let Err(e) = self.persist() {
            self.components.pop();
            self.next_id = id;
            let _ = fs::remove_file(self.root.join(&image_path));
            return Err(e);
        }
        Ok(id)
    }

    /// Adds a generated face so later searches can find it. `description`
    /// must assign every attribute of every kind, and the provenance must
    /// name an existing record of each kind.
    pub fn save_generated_face(
        &mut self,
        image: GrayImage,
        description: FaceDescription,
        provenance: Provenance,
    ) -> Result<RecordId, CatalogError> {
        validate_description(&description)?;
        self.check_sources(&provenance.sources)?;
        let id = self.allocate_id()?;
        let image_path = PathBuf::from(GENERATED_DIR).join(format!("{id:06}.pgm"));
        self.write_image(&image_path, &image)?;
        self.faces.push(GeneratedFace {
            id,
            image,
            image_path: image_path.clone(),
            description,
            provenance,
        });
        self.next_id = id + 1;
        if let Err(e) = self.persist() {
            self.faces.pop();
            self.next_id = id;
            let _ = fs::remove_file(self.root.join(&image_path));
            return Err(e);
        }
        Ok(id)
    }

    pub(crate) fn check_sources(&self, sources: &BTreeMap<ComponentKind, RecordId>) -> Result<(), CatalogError> {
        for kind in ComponentKind::ALL {
            let id = *sources.get(&kind).ok_or(CatalogError::IncompleteProvenance(kind))?;
            let record = self.component(id).ok_or(CatalogError::UnknownRecord(id))?;
            if record.kind != kind {
                return Err(CatalogError::WrongKind {
                    id,
                    expected: kind,
                    found: record.kind,
                });
            }
        }
        Ok(())
    }

    fn allocate_id(&self) -> Result<RecordId, CatalogError> {
        let id = self.next_id;
        if self.component(id).is_some() || self.face(id).is_some() {
            return Err(CatalogError::DuplicateId(id));
        }
        Ok(id)
    }

    fn write_image(&self, rel: &Path, image: &GrayImage) -> Result<(), CatalogError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        write_atomic(&path, &write_pgm(image))?;
        Ok(())
    }

    fn persist(&self) -> Result<(), CatalogError> {
        let text = manifest::Manifest::from_catalog(self).render()?;
        write_atomic(&self.root.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
