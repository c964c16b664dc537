//! Face synthesis from catalogued parts.
//!
//! A face cutting (the head outline with ears and hair) is thresholded, the
//! upper-left corner of its ear becomes the anchor, and six parts (two
//! eyebrows, two eyes, a nose and lips) are laid out relative to that anchor
//! and pasted with a neighbourhood-weighted blend that hides the seams.
//!
//! ```
//! use fasy_core::{blend_pixel, intensity_factor};
//!
//! let factor = intensity_factor(900, 450).unwrap();
//! assert_eq!(blend_pixel(100, 50, factor), 60);
//! ```

pub mod assembly;
pub mod blending;
pub mod catalog;
pub mod compose;
pub mod fixtures;
pub mod imaging;
pub mod service;

pub use assembly::{
    apply_overrides, compute_layout, compute_layout_with, find_ear_anchor, Anchor, AssemblyError, ComponentDims,
    Layout, LayoutConstants, LayoutOverride, Offset, PerSlot, Position, Slot,
};
pub use blending::{
    blend_pixel, intensity_factor, place_component, place_component_with, seam_contrast, BlendError, BlendTrace,
    PlaceOptions, PlacementMode, TraceEntry,
};
pub use catalog::{
    Assignment, Catalog, CatalogError, ComponentKind, ComponentRecord, FaceDescription, FaceQuery, GeneratedFace,
    Provenance, RecordId, CANT_SAY,
};
pub use compose::{compose, compose_records, ComposeError, ComposeOptions, Composite};
pub use imaging::{
    component_mask, face_mask, neighborhood_sum, otsu_threshold, read_pgm, write_pgm, ForegroundMask, GrayImage,
    ImagingError, MaskPolarity, Threshold,
};
pub use service::{Candidate, Preview, ServiceError, Session, SessionId, SessionState, Workbench};
