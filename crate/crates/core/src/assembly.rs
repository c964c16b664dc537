//! Ear-anchored placement of the six facial parts on a face cutting.
//!
//! The anchor is the first foreground pixel met when scanning the cutting's
//! mask column by column from the left, top to bottom inside each column:
//! the upper-left corner of the subject's right ear. Every part's top-left
//! corner is then a fixed integer expression of the anchor and the part sizes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ComponentKind;
use crate::imaging::{ForegroundMask, GrayImage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssemblyError {
    #[error("mask has no foreground pixel; no ear anchor can be found")]
    NoForeground,
    #[error("{slot} would be placed at negative position ({row}, {col})")]
    NegativePosition { slot: Slot, row: i64, col: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Anchor {
    pub row: usize,
    pub col: usize,
}

/// Top-left corner of a placed part on the cutting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

/// Width is the column extent, height the row extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentDims {
    pub height: usize,
    pub width: usize,
}

impl ComponentDims {
    pub fn of(img: &GrayImage) -> Self {
        Self {
            height: img.rows(),
            width: img.cols(),
        }
    }
}

/// The six parts placed on a cutting, in placement order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    RightEyebrow,
    RightEye,
    Nose,
    LeftEyebrow,
    LeftEye,
    Lip,
}

impl Slot {
    /// Placement order. Tuned blending updates the cutting in place, so the
    /// order is part of the output contract.
    pub const ALL: [Slot; 6] = [
        Slot::RightEyebrow,
        Slot::RightEye,
        Slot::Nose,
        Slot::LeftEyebrow,
        Slot::LeftEye,
        Slot::Lip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::RightEyebrow => "right_eyebrow",
            Slot::RightEye => "right_eye",
            Slot::Nose => "nose",
            Slot::LeftEyebrow => "left_eyebrow",
            Slot::LeftEye => "left_eye",
            Slot::Lip => "lip",
        }
    }

    pub fn kind(self) -> ComponentKind {
        match self {
            Slot::RightEyebrow => ComponentKind::RightEyebrow,
            Slot::RightEye => ComponentKind::RightEye,
            Slot::Nose => ComponentKind::Nose,
            Slot::LeftEyebrow => ComponentKind::LeftEyebrow,
            Slot::LeftEye => ComponentKind::LeftEye,
            Slot::Lip => ComponentKind::Lip,
        }
    }

    pub fn for_kind(kind: ComponentKind) -> Option<Slot> {
        Slot::ALL.into_iter().find(|s| s.kind() == kind)
    }
}

impl std::fmt::Display for Slot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-' && *c != ' ')
            .flat_map(char::to_lowercase)
            .collect();
        Slot::ALL
            .into_iter()
            .find(|slot| slot.name().replace('_', "") == norm)
            .ok_or_else(|| format!("unknown slot '{s}'"))
    }
}

/// One value per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PerSlot<T> {
    pub right_eyebrow: T,
    pub right_eye: T,
    pub nose: T,
    pub left_eyebrow: T,
    pub left_eye: T,
    pub lip: T,
}

impl<T> PerSlot<T> {
    pub fn from_fn(mut f: impl FnMut(Slot) -> T) -> Self {
        Self {
            right_eyebrow: f(Slot::RightEyebrow),
            right_eye: f(Slot::RightEye),
            nose: f(Slot::Nose),
            left_eyebrow: f(Slot::LeftEyebrow),
            left_eye: f(Slot::LeftEye),
            lip: f(Slot::Lip),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(Slot) -> Result<T, E>) -> Result<Self, E> {
        Ok(Self {
            right_eyebrow: f(Slot::RightEyebrow)?,
            right_eye: f(Slot::RightEye)?,
            nose: f(Slot::Nose)?,
            left_eyebrow: f(Slot::LeftEyebrow)?,
            left_eye: f(Slot::LeftEye)?,
            lip: f(Slot::Lip)?,
        })
    }

    /// `(slot, value)` pairs in placement order.
    pub fn iter(&self) -> impl Iterator<Item = (Slot, &T)> {
        Slot::ALL.into_iter().map(move |s| (s, &self[s]))
    }
}

impl<T> std::ops::Index<Slot> for PerSlot<T> {
    type Output = T;

    fn index(&self, slot: Slot) -> &T {
        match slot {
            Slot::RightEyebrow => &self.right_eyebrow,
            Slot::RightEye => &self.right_eye,
            Slot::Nose => &self.nose,
            Slot::LeftEyebrow => &self.left_eyebrow,
            Slot::LeftEye => &self.left_eye,
            Slot::Lip => &self.lip,
        }
    }
}

impl<T> std::ops::IndexMut<Slot> for PerSlot<T> {
    fn index_mut(&mut self, slot: Slot) -> &mut T {
        match slot {
            Slot::RightEyebrow => &mut self.right_eyebrow,
            Slot::RightEye => &mut self.right_eye,
            Slot::Nose => &mut self.nose,
            Slot::LeftEyebrow => &mut self.left_eyebrow,
            Slot::LeftEye => &mut self.left_eye,
            Slot::Lip => &mut self.lip,
        }
    }
}

/// Offsets of the placement equations. The defaults were tuned for 92×112
/// cuttings; other canvas sizes need their own values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConstants {
    /// Added to the anchor column before any part is placed.
    pub anchor_col_shift: i64,
    /// Row offset of both eyebrows relative to the anchor row.
    pub eyebrow_row_offset: i64,
    /// Row offset of the nose relative to the anchor row.
    pub nose_row_offset: i64,
    /// Rows between the bottom of the nose and the top of the lip.
    pub lip_row_gap: i64,
    /// Column offset of the left eyebrow from the nose's right edge.
    pub left_eyebrow_col_offset: i64,
}

impl Default for LayoutConstants {
    fn default() -> Self {
        Self {
            anchor_col_shift: 10,
            eyebrow_row_offset: -5,
            nose_row_offset: -2,
            lip_row_gap: 5,
            left_eyebrow_col_offset: -5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    /// The ear anchor after the column shift.
    pub anchor: Anchor,
    #[serde(flatten)]
    pub positions: PerSlot<Position>,
}

impl Layout {
    pub fn position(&self, slot: Slot) -> Position {
        self.positions[slot]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Offset {
    pub drow: i64,
    pub dcol: i64,
}

impl std::ops::Add for Offset {
    type Output = Offset;

    fn add(self, rhs: Offset) -> Offset {
        Offset {
            drow: self.drow + rhs.drow,
            dcol: self.dcol + rhs.dcol,
        }
    }
}

/// Operator nudges applied on top of the computed layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayoutOverride(#[serde(with = "override_serde")] pub PerSlot<Offset>);

impl LayoutOverride {
    pub fn single(slot: Slot, drow: i64, dcol: i64) -> Self {
        let mut o = Self::default();
        o.0[slot] = Offset { drow, dcol };
        o
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|(_, o)| *o == Offset::default())
    }

    /// Componentwise sum; nudges accumulate.
    pub fn then(&self, other: &LayoutOverride) -> LayoutOverride {
        LayoutOverride(PerSlot::from_fn(|s| self.0[s] + other.0[s]))
    }
}

// Overrides list only the slots that move, e.g. `[lip]\ndrow = 3`.
mod override_serde {
    use super::{Offset, PerSlot, Slot};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(v: &PerSlot<Offset>, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, &Offset> = v
            .iter()
            .filter(|(_, o)| **o != Offset::default())
            .map(|(slot, o)| (slot.name(), o))
            .collect();
        map.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PerSlot<Offset>, D::Error> {
        let map = BTreeMap::<Slot, Offset>::deserialize(d)?;
        Ok(PerSlot::from_fn(|s| map.get(&s).copied().unwrap_or_default()))
    }
}

/// Scans columns left to right and rows top to bottom inside each column;
/// the first foreground bit is the anchor.
pub fn find_ear_anchor(mask: &ForegroundMask) -> Result<Anchor, AssemblyError> {
    for col in 0..mask.cols() {
        for row in 0..mask.rows() {
            if mask.get(row, col) {
                return Ok(Anchor { row, col });
            }
        }
    }
    Err(AssemblyError::NoForeground)
}

pub fn compute_layout(anchor: Anchor, dims: &PerSlot<ComponentDims>) -> Result<Layout, AssemblyError> {
    compute_layout_with(anchor, dims, &LayoutConstants::default())
}

pub fn compute_layout_with(
    anchor: Anchor,
    dims: &PerSlot<ComponentDims>,
    k: &LayoutConstants,
) -> Result<Layout, AssemblyError> {
    let w = |s: Slot| dims[s].width as i64;
    let tx = anchor.row as i64;
    let ty = anchor.col as i64 + k.anchor_col_shift;

    let right_eyebrow = (tx + k.eyebrow_row_offset, ty);
    let right_eye = (tx, ty + w(Slot::RightEyebrow) - w(Slot::RightEye));
    let nose = (tx + k.nose_row_offset, ty + w(Slot::RightEyebrow));
    let left_eyebrow = (
        tx + k.eyebrow_row_offset,
        nose.1 + w(Slot::Nose) + k.left_eyebrow_col_offset,
    );
    let left_eye = (tx, left_eyebrow.1);
    let lip = (
        nose.0 + dims.nose.height as i64 + k.lip_row_gap,
        nose.1 + w(Slot::Nose).div_euclid(2) - w(Slot::Lip).div_euclid(2),
    );

    let raw = PerSlot {
        right_eyebrow,
        right_eye,
        nose,
        left_eyebrow,
        left_eye,
        lip,
    };
    let positions = PerSlot::try_from_fn(|s| {
        let (row, col) = to_index(raw[s].0, raw[s].1, s)?;
        Ok(Position { row, col })
    })?;
    // right_eyebrow sits at the shifted anchor column, so a negative shift
    // has already been reported above.
    Ok(Layout {
        anchor: Anchor {
            row: anchor.row,
            col: ty as usize,
        },
        positions,
    })
}

fn to_index(row: i64, col: i64, slot: Slot) -> Result<(usize, usize), AssemblyError> {
    if row < 0 || col < 0 {
        return Err(AssemblyError::NegativePosition { slot, row, col });
    }
    Ok((row as usize, col as usize))
}

pub fn apply_overrides(layout: &Layout, overrides: &LayoutOverride) -> Result<Layout, AssemblyError> {
    let positions = PerSlot::try_from_fn(|s| {
        let p = layout.positions[s];
        let o = overrides.0[s];
        let (row, col) = to_index(p.row as i64 + o.drow, p.col as i64 + o.dcol, s)?;
        Ok(Position { row, col })
    })?;
    Ok(Layout {
        anchor: layout.anchor,
        positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dims(w_rbrow: usize, w_reye: usize, w_nose: usize, h_nose: usize, w_lip: usize) -> PerSlot<ComponentDims> {
        let d = |width, height| ComponentDims { height, width };
        PerSlot {
            right_eyebrow: d(w_rbrow, 8),
            right_eye: d(w_reye, 10),
            nose: d(w_nose, h_nose),
            left_eyebrow: d(w_rbrow, 8),
            left_eye: d(w_reye, 10),
            lip: d(w_lip, 12),
        }
    }

    fn pos(row: usize, col: usize) -> Position {
        Position { row, col }
    }

    #[test]
    fn anchor_of_empty_mask() {
        let mask = ForegroundMask::from_bits(3, 3, vec![false; 9]).unwrap();
        assert_eq!(find_ear_anchor(&mask), Err(AssemblyError::NoForeground));
    }

    #[test]
    fn anchor_single_bit() {
        let mask = ForegroundMask::from_fn(112, 92, |r, c| (r, c) == (40, 7)).unwrap();
        assert_eq!(find_ear_anchor(&mask).unwrap(), Anchor { row: 40, col: 7 });
    }

    #[test]
    fn anchor_prefers_leftmost_column() {
        let set = [(10, 5), (3, 5), (20, 4)];
        let mask = ForegroundMask::from_fn(30, 10, |r, c| set.contains(&(r, c))).unwrap();
        assert_eq!(find_ear_anchor(&mask).unwrap(), Anchor { row: 20, col: 4 });
    }

    #[test]
    fn layout_hand_example() {
        let layout = compute_layout(Anchor { row: 30, col: 5 }, &dims(24, 18, 20, 30, 26)).unwrap();
        assert_eq!(layout.anchor, Anchor { row: 30, col: 15 });
        assert_eq!(layout.positions.right_eyebrow, pos(25, 15));
        assert_eq!(layout.positions.right_eye, pos(30, 21));
        assert_eq!(layout.positions.nose, pos(28, 39));
        assert_eq!(layout.positions.left_eyebrow, pos(25, 54));
        assert_eq!(layout.positions.left_eye, pos(30, 54));
        assert_eq!(layout.positions.lip, pos(63, 36));
    }

    #[test]
    fn equal_widths_align_eye_under_brow() {
        let layout = compute_layout(Anchor { row: 30, col: 5 }, &dims(20, 20, 20, 30, 26)).unwrap();
        assert_eq!(layout.positions.right_eye.col, layout.positions.right_eyebrow.col);
    }

    #[test]
    fn wide_eye_still_follows_formula() {
        // eye wider than brow: the eye starts left of the brow
        let layout = compute_layout(Anchor { row: 30, col: 5 }, &dims(10, 18, 20, 30, 26)).unwrap();
        assert_eq!(layout.positions.right_eye.col, 7);
    }

    #[test]
    fn anchor_near_top_is_negative() {
        let err = compute_layout(Anchor { row: 2, col: 0 }, &dims(24, 18, 20, 30, 26)).unwrap_err();
        assert_eq!(
            err,
            AssemblyError::NegativePosition {
                slot: Slot::RightEyebrow,
                row: -3,
                col: 10
            }
        );
    }

    #[test]
    fn custom_constants() {
        let k = LayoutConstants {
            anchor_col_shift: 0,
            eyebrow_row_offset: -1,
            nose_row_offset: 0,
            lip_row_gap: 0,
            left_eyebrow_col_offset: 0,
        };
        let layout = compute_layout_with(Anchor { row: 30, col: 5 }, &dims(24, 18, 20, 30, 26), &k).unwrap();
        assert_eq!(layout.positions.right_eyebrow, pos(29, 5));
        assert_eq!(layout.positions.nose, pos(30, 29));
        assert_eq!(layout.positions.left_eyebrow, pos(29, 49));
        assert_eq!(layout.positions.lip, pos(60, 26));
    }

    #[test]
    fn overrides() {
        let layout = compute_layout(Anchor { row: 30, col: 5 }, &dims(24, 18, 20, 30, 26)).unwrap();
        assert_eq!(apply_overrides(&layout, &LayoutOverride::default()).unwrap(), layout);

        let moved = apply_overrides(&layout, &LayoutOverride::single(Slot::Lip, 3, -2)).unwrap();
        assert_eq!(moved.positions.lip, pos(66, 34));
        for slot in Slot::ALL.into_iter().filter(|s| *s != Slot::Lip) {
            assert_eq!(moved.position(slot), layout.position(slot));
        }

        let err = apply_overrides(&layout, &LayoutOverride::single(Slot::Nose, -100, 0)).unwrap_err();
        assert!(matches!(err, AssemblyError::NegativePosition { slot: Slot::Nose, .. }));
    }

    #[test]
    fn override_toml_round_trip() {
        let text = "[lip]\ndrow = 3\ndcol = -2\n\n[right_eye]\ndcol = 1\n";
        let o: LayoutOverride = toml::from_str(text).unwrap();
        assert_eq!(o.0.lip, Offset { drow: 3, dcol: -2 });
        assert_eq!(o.0.right_eye, Offset { drow: 0, dcol: 1 });
        assert_eq!(o.0.nose, Offset::default());
        let back: LayoutOverride = toml::from_str(&toml::to_string(&o).unwrap()).unwrap();
        assert_eq!(back, o);
        assert!(toml::from_str::<LayoutOverride>("[chin]\ndrow = 1\n").is_err());
    }

    #[test]
    fn constants_toml_partial() {
        let k: LayoutConstants = toml::from_str("lip_row_gap = 7\n").unwrap();
        assert_eq!(k.lip_row_gap, 7);
        assert_eq!(k.anchor_col_shift, 10);
        assert!(toml::from_str::<LayoutConstants>("bogus = 1\n").is_err());
    }

    #[test]
    fn slot_parsing() {
        assert_eq!("left_eye".parse::<Slot>().unwrap(), Slot::LeftEye);
        assert_eq!("RightEyebrow".parse::<Slot>().unwrap(), Slot::RightEyebrow);
        assert_eq!("right-eye".parse::<Slot>().unwrap(), Slot::RightEye);
        assert!("chin".parse::<Slot>().is_err());
    }

    fn offset_strategy() -> impl Strategy<Value = LayoutOverride> {
        proptest::collection::vec((-20i64..20, -20i64..20), 6).prop_map(|v| {
            LayoutOverride(PerSlot::from_fn(|s| {
                let i = Slot::ALL.iter().position(|x| *x == s).unwrap();
                Offset {
                    drow: v[i].0,
                    dcol: v[i].1,
                }
            }))
        })
    }

    proptest! {
        #[test]
        fn anchor_matches_brute_force(rows in 1usize..20, cols in 1usize..20, seed in any::<u64>(), density in 0.0f64..0.3) {
            let mut s = seed;
            let mask = ForegroundMask::from_fn(rows, cols, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                ((s >> 11) as f64 / (1u64 << 53) as f64) < density
            }).unwrap();
            let oracle = mask.foreground().min_by_key(|&(r, c)| (c, r));
            match (find_ear_anchor(&mask), oracle) {
                (Ok(a), Some((r, c))) => prop_assert_eq!((a.row, a.col), (r, c)),
                (Err(AssemblyError::NoForeground), None) => {}
                other => prop_assert!(false, "mismatch {:?}", other),
            }
        }

        #[test]
        fn right_edges_align_and_lip_centres(
            ar in 5usize..60, ac in 0usize..30,
            wb in 1usize..40, we in 1usize..40, wn in 1usize..40, hn in 1usize..40, wl in 1usize..40,
        ) {
            if let Ok(l) = compute_layout(Anchor { row: ar, col: ac }, &dims(wb, we, wn, hn, wl)) {
                prop_assert_eq!(l.positions.right_eye.col + we, l.positions.right_eyebrow.col + wb);
                let lip_mid = (l.positions.lip.col + wl / 2) as i64;
                let nose_mid = (l.positions.nose.col + wn / 2) as i64;
                prop_assert!((lip_mid - nose_mid).abs() <= 1);
            }
        }

        #[test]
        fn overrides_are_additive(a in offset_strategy(), b in offset_strategy()) {
            let layout = compute_layout(Anchor { row: 50, col: 40 }, &dims(24, 18, 20, 30, 26)).unwrap();
            let stepwise = apply_overrides(&apply_overrides(&layout, &a).unwrap(), &b).unwrap();
            let combined = apply_overrides(&layout, &a.then(&b)).unwrap();
            prop_assert_eq!(stepwise, combined);
        }
    }
}
