//! Whole-face composition: mask the cutting, find the ear anchor, lay out
//! the six parts, then place each part in [`Slot::ALL`] order.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::assembly::{
    apply_overrides, compute_layout_with, find_ear_anchor, AssemblyError, ComponentDims, Layout, LayoutConstants,
    LayoutOverride, PerSlot, Slot,
};
use crate::blending::{place_component, seam_contrast, BlendError, PlacementMode};
use crate::catalog::{Catalog, ComponentKind, RecordId};
use crate::imaging::{component_mask, face_mask, ForegroundMask, GrayImage, ImagingError, Threshold};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("face cutting: {0}")]
    Cutting(ImagingError),
    #[error("face cutting: {0}")]
    Anchor(AssemblyError),
    #[error("{slot}: {source}")]
    Mask { slot: Slot, source: ImagingError },
    #[error("{0}")]
    Layout(AssemblyError),
    #[error("{slot}: {source}")]
    Placement { slot: Slot, source: BlendError },
    #[error("no {0} selected")]
    MissingSelection(ComponentKind),
    #[error("unknown record {0}")]
    UnknownRecord(RecordId),
    #[error("record {id} is a {found}, not a {expected}")]
    WrongKind {
        id: RecordId,
        expected: ComponentKind,
        found: ComponentKind,
    },
}

impl ComposeError {
    /// The slot at fault, when the error concerns one part.
    pub fn slot(&self) -> Option<Slot> {
        match self {
            ComposeError::Mask { slot, .. } | ComposeError::Placement { slot, .. } => Some(*slot),
            ComposeError::Layout(AssemblyError::NegativePosition { slot, .. }) => Some(*slot),
            _ => None,
        }
    }

    /// The component kind at fault, when known.
    pub fn kind(&self) -> Option<ComponentKind> {
        match self {
            ComposeError::Cutting(_) | ComposeError::Anchor(_) => Some(ComponentKind::FaceCutting),
            ComposeError::MissingSelection(k) => Some(*k),
            ComposeError::WrongKind { expected, .. } => Some(*expected),
            other => other.slot().map(Slot::kind),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComposeOptions {
    pub mode: PlacementMode,
    pub overrides: LayoutOverride,
    pub constants: LayoutConstants,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composite {
    pub image: GrayImage,
    /// Final positions, overrides included.
    pub layout: Layout,
    pub masks: PerSlot<ForegroundMask>,
}

impl Composite {
    /// Worst seam over all six placed parts.
    pub fn seam_contrast(&self) -> u8 {
        Slot::ALL
            .into_iter()
            .map(|s| seam_contrast(&self.image, &self.masks[s], self.layout.position(s)))
            .max()
            .unwrap_or(0)
    }
}

pub fn compose(
    cutting: &GrayImage,
    parts: &PerSlot<&GrayImage>,
    opts: &ComposeOptions,
) -> Result<Composite, ComposeError> {
    let cutting_mask = face_mask(cutting, Threshold::Automatic).map_err(ComposeError::Cutting)?;
    let anchor = find_ear_anchor(&cutting_mask).map_err(ComposeError::Anchor)?;
    let dims = PerSlot::from_fn(|s| ComponentDims::of(parts[s]));
    let base = compute_layout_with(anchor, &dims, &opts.constants).map_err(ComposeError::Layout)?;
    let layout = apply_overrides(&base, &opts.overrides).map_err(ComposeError::Layout)?;
    let masks = PerSlot::try_from_fn(|slot| {
        component_mask(parts[slot], Threshold::Automatic).map_err(|source| ComposeError::Mask { slot, source })
    })?;

    let mut image = cutting.clone();
    for slot in Slot::ALL {
        image = place_component(image, parts[slot], &masks[slot], layout.position(slot), opts.mode)
            .map_err(|source| ComposeError::Placement { slot, source })?;
    }
    Ok(Composite { image, layout, masks })
}

/// Composes from catalog records, one per kind.
pub fn compose_records(
    catalog: &Catalog,
    selections: &BTreeMap<ComponentKind, RecordId>,
    opts: &ComposeOptions,
) -> Result<Composite, ComposeError> {
    let fetch = |kind: ComponentKind| -> Result<&GrayImage, ComposeError> {
        let id = *selections.get(&kind).ok_or(ComposeError::MissingSelection(kind))?;
        let record = catalog.component(id).ok_or(ComposeError::UnknownRecord(id))?;
        if record.kind != kind {
            return Err(ComposeError::WrongKind {
                id,
                expected: kind,
                found: record.kind,
            });
        }
        Ok(&record.image)
    };
    let cutting = fetch(ComponentKind::FaceCutting)?;
    let parts = PerSlot::try_from_fn(|slot| fetch(slot.kind()))?;
    compose(cutting, &parts, opts)
}
