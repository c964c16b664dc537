//! Shared inputs for the benchmarks.

use fasy_core::fixtures::{draw_component, reference_query};
use fasy_core::{ComponentKind, GrayImage, PerSlot, Slot};

/// A cutting and one part per slot, drawn from the first reference description.
pub fn reference_face() -> (GrayImage, PerSlot<GrayImage>) {
    let query = reference_query();
    let draw = |kind: ComponentKind, seed| draw_component(kind, &query[&kind], seed);
    let cutting = draw(ComponentKind::FaceCutting, 1);
    let parts = PerSlot::from_fn(|slot: Slot| draw(slot.kind(), 2 + slot as u64));
    (cutting, parts)
}
