//! `catalog.toml` layout.
//!
//! ```toml
//! format = "fasy-catalog/1"
//! next_id = 3
//!
//! [[component]]
//! id = 1
//! kind = "Nose"
//! image = "nose/000001.pgm"
//!
//! [component.attributes]
//! Length = "Normal"
//! Nostrils = "Normal"
//! Sharpness = "Sharp"
//! Width = "Cant Say"
//!
//! [[face]]
//! id = 2
//! image = "generated/000002.pgm"
//! # description, provenance tables follow
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    validate_description, validate_record, Assignment, Catalog, CatalogError, ComponentKind, ComponentRecord,
    FaceDescription, GeneratedFace, Provenance, RecordId,
};
use crate::imaging::read_pgm;

pub const FORMAT: &str = "fasy-catalog/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    format: String,
    next_id: RecordId,
    #[serde(default, rename = "component")]
    components: Vec<ComponentEntry>,
    #[serde(default, rename = "face", skip_serializing_if = "Vec::is_empty")]
    faces: Vec<FaceEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentEntry {
    id: RecordId,
    kind: ComponentKind,
    image: String,
    attributes: Assignment,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaceEntry {
    id: RecordId,
    image: String,
    description: FaceDescription,
    provenance: Provenance,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let doc: Manifest = toml::from_str(text).map_err(|e| CatalogError::CorruptManifest(e.to_string()))?;
        if doc.format != FORMAT {
            return Err(CatalogError::CorruptManifest(format!(
                "unsupported format '{}' (expected '{FORMAT}')",
                doc.format
            )));
        }
        Ok(doc)
    }

    pub fn from_catalog(cat: &Catalog) -> Self {
        Manifest {
            format: FORMAT.to_string(),
            next_id: cat.next_id,
            components: cat
                .components
                .iter()
                .map(|r| ComponentEntry {
                    id: r.id,
                    kind: r.kind,
                    image: portable(&r.image_path),
                    attributes: r.attributes.clone(),
                })
                .collect(),
            faces: cat
                .faces
                .iter()
                .map(|f| FaceEntry {
                    id: f.id,
                    image: portable(&f.image_path),
                    description: f.description.clone(),
                    provenance: f.provenance.clone(),
                })
                .collect(),
        }
    }

    pub fn render(&self) -> Result<String, CatalogError> {
        toml::to_string(self).map_err(|e| CatalogError::CorruptManifest(e.to_string()))
    }
}

pub fn load(root: PathBuf, doc: Manifest) -> Result<Catalog, CatalogError> {
    let mut seen = BTreeSet::new();
    let mut components = Vec::with_capacity(doc.components.len());
    for entry in doc.components {
        if !seen.insert(entry.id) {
            return Err(CatalogError::DuplicateId(entry.id));
        }
        validate_record(entry.kind, &entry.attributes)?;
        let image_path = relative_path(&entry.image)?;
        let image = load_image(&root, &image_path)?;
        components.push(ComponentRecord {
            id: entry.id,
            kind: entry.kind,
            attributes: entry.attributes,
            image,
            image_path,
        });
    }
    components.sort_by_key(|r| r.id);

    let mut faces = Vec::with_capacity(doc.faces.len());
    for entry in doc.faces {
        if !seen.insert(entry.id) {
            return Err(CatalogError::DuplicateId(entry.id));
        }
        validate_description(&entry.description)?;
        let image_path = relative_path(&entry.image)?;
        let image = load_image(&root, &image_path)?;
        faces.push(GeneratedFace {
            id: entry.id,
            image,
            image_path,
            description: entry.description,
            provenance: entry.provenance,
        });
    }
    faces.sort_by_key(|f| f.id);

    if let Some(&max) = seen.last() {
        if doc.next_id <= max {
            return Err(CatalogError::CorruptManifest(format!(
                "next_id {} does not exceed existing id {max}",
                doc.next_id
            )));
        }
    }
    let cat = Catalog {
        root,
        next_id: doc.next_id.max(1),
        components,
        faces,
    };
    for face in &cat.faces {
        cat.check_sources(&face.provenance.sources)
            .map_err(|e| CatalogError::CorruptManifest(format!("face {}: {e}", face.id)))?;
    }
    Ok(cat)
}

fn load_image(root: &Path, rel: &Path) -> Result<crate::imaging::GrayImage, CatalogError> {
    let path = root.join(rel);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CatalogError::MissingImage(path)),
        Err(e) => return Err(e.into()),
    };
    Ok(read_pgm(&bytes)?)
}

/// Image paths must stay inside the catalog root.
fn relative_path(s: &str) -> Result<PathBuf, CatalogError> {
    let path = PathBuf::from(s);
    if s.is_empty() || !path.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(CatalogError::CorruptManifest(format!(
            "image path '{s}' must be relative and inside the catalog"
        )));
    }
    Ok(path)
}

fn portable(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}
