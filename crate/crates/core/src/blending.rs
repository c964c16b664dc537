//! Placing a part onto the cutting.
//!
//! Three modes mirror the stages of building a face by hand: paste the whole
//! crop ([`PlacementMode::Blind`]), paste only the part's own pixels
//! ([`PlacementMode::Masked`]), or blend those pixels into the cutting with a
//! neighborhood intensity factor ([`PlacementMode::Tuned`]).
//!
//! Tuned placement visits the part's foreground pixels in row-major order and
//! rewrites the cutting in place, so each 3×3 cutting sum sees the pixels
//! already blended before it:
//!
//! ```text
//! F1 = sum3x3(cutting, x, y)       C1 = sum3x3(part, i, j)
//! IF = F1 / C1
//! cutting(x, y) = round((cutting(x, y) + 2·IF·part(i, j)) / (1 + 2·IF))
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::Position;
use crate::imaging::{neighborhood_sum, ForegroundMask, GrayImage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlendError {
    #[error("component neighborhood sums to zero; intensity factor undefined")]
    ZeroComponentNeighborhood,
    #[error("component is {comp_rows}x{comp_cols} but its mask is {mask_rows}x{mask_cols}")]
    DimensionMismatch {
        comp_rows: usize,
        comp_cols: usize,
        mask_rows: usize,
        mask_cols: usize,
    },
    #[error("component pixel ({row}, {col}) lands outside the {rows}x{cols} canvas")]
    OutOfCanvas {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementMode {
    Blind,
    Masked,
    #[default]
    Tuned,
}

impl PlacementMode {
    pub const ALL: [PlacementMode; 3] = [PlacementMode::Blind, PlacementMode::Masked, PlacementMode::Tuned];

    pub fn name(self) -> &'static str {
        match self {
            PlacementMode::Blind => "blind",
            PlacementMode::Masked => "masked",
            PlacementMode::Tuned => "tuned",
        }
    }
}

impl std::fmt::Display for PlacementMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlacementMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlacementMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown placement mode '{s}' (expected blind, masked or tuned)"))
    }
}

/// `F1 / C1`.
pub fn intensity_factor(face_sum: u32, comp_sum: u32) -> Result<f64, BlendError> {
    if comp_sum == 0 {
        return Err(BlendError::ZeroComponentNeighborhood);
    }
    Ok(f64::from(face_sum) / f64::from(comp_sum))
}

/// Weighted mean of the cutting pixel (weight 1) and the part pixel
/// (weight `2·factor`), rounded half up. `factor` must be finite and >= 0.
pub fn blend_pixel(face: u8, comp: u8, factor: f64) -> u8 {
    debug_assert!(factor.is_finite() && factor >= 0.0, "bad intensity factor {factor}");
    let w = 2.0 * factor;
    let value = (f64::from(face) + w * f64::from(comp)) / (1.0 + w);
    (value + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Extra knobs for [`place_component_with`].
#[derive(Debug, Default)]
pub struct PlaceOptions<'a> {
    /// Compute every cutting sum from the cutting as it was before the part
    /// was placed, instead of from the partially updated cutting.
    pub snapshot_sums: bool,
    /// Records every tuned pixel when present.
    pub trace: Option<&'a mut BlendTrace>,
}

/// One audited tuned pixel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub row: usize,
    pub col: usize,
    pub face_sum: u32,
    pub comp_sum: u32,
    /// `None` when the component sum was zero and the pixel was copied.
    pub factor: Option<f64>,
    pub old: u8,
    pub new: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlendTrace {
    pub entries: Vec<TraceEntry>,
}

impl BlendTrace {
    /// Tab-separated table with a header row; `-` marks copied pixels.
    pub fn to_table(&self) -> String {
        let mut out = String::from("row\tcol\tF1\tC1\tIF\told\tnew\n");
        for e in &self.entries {
            let factor = e.factor.map_or_else(|| "-".to_string(), |f| format!("{f:.6}"));
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                e.row, e.col, e.face_sum, e.comp_sum, factor, e.old, e.new
            );
        }
        out
    }
}

pub fn place_component(
    face: GrayImage,
    comp: &GrayImage,
    mask: &ForegroundMask,
    pos: Position,
    mode: PlacementMode,
) -> Result<GrayImage, BlendError> {
    place_component_with(face, comp, mask, pos, mode, PlaceOptions::default())
}

pub fn place_component_with(
    mut face: GrayImage,
    comp: &GrayImage,
    mask: &ForegroundMask,
    pos: Position,
    mode: PlacementMode,
    mut opts: PlaceOptions<'_>,
) -> Result<GrayImage, BlendError> {
    if comp.rows() != mask.rows() || comp.cols() != mask.cols() {
        return Err(BlendError::DimensionMismatch {
            comp_rows: comp.rows(),
            comp_cols: comp.cols(),
            mask_rows: mask.rows(),
            mask_cols: mask.cols(),
        });
    }
    check_fits(&face, comp, mask, pos, mode)?;

    match mode {
        PlacementMode::Blind => {
            for i in 0..comp.rows() {
                for j in 0..comp.cols() {
                    face.set(pos.row + i, pos.col + j, comp.get(i, j));
                }
            }
        }
        PlacementMode::Masked => {
            for (i, j) in mask.foreground() {
                face.set(pos.row + i, pos.col + j, comp.get(i, j));
            }
        }
        PlacementMode::Tuned => {
            let original = opts.snapshot_sums.then(|| face.clone());
            for (i, j) in mask.foreground() {
                let (x, y) = (pos.row + i, pos.col + j);
                let sum_source = original.as_ref().unwrap_or(&face);
                let face_sum = neighborhood_sum(sum_source, x, y).expect("checked by check_fits");
                let comp_sum = neighborhood_sum(comp, i, j).expect("inside component");
                let old = face.get(x, y);
                let part = comp.get(i, j);
                let factor = intensity_factor(face_sum, comp_sum).ok();
                // A pitch-black part neighborhood has no factor; keep the part pixel.
                let new = factor.map_or(part, |f| blend_pixel(old, part, f));
                face.set(x, y, new);
                if let Some(trace) = opts.trace.as_deref_mut() {
                    trace.entries.push(TraceEntry {
                        row: x,
                        col: y,
                        face_sum,
                        comp_sum,
                        factor,
                        old,
                        new,
                    });
                }
            }
        }
    }
    Ok(face)
}

fn check_fits(
    face: &GrayImage,
    comp: &GrayImage,
    mask: &ForegroundMask,
    pos: Position,
    mode: PlacementMode,
) -> Result<(), BlendError> {
    let out = |row, col| BlendError::OutOfCanvas {
        row,
        col,
        rows: face.rows(),
        cols: face.cols(),
    };
    if mode == PlacementMode::Blind {
        let (last_row, last_col) = (pos.row + comp.rows() - 1, pos.col + comp.cols() - 1);
        if !face.contains(last_row, last_col) {
            return Err(out(last_row, last_col));
        }
        return Ok(());
    }
    match mask
        .foreground()
        .map(|(i, j)| (pos.row + i, pos.col + j))
        .find(|&(r, c)| !face.contains(r, c))
    {
        Some((r, c)) => Err(out(r, c)),
        None => Ok(()),
    }
}

/// Largest absolute 4-neighbour intensity step across a placed part's seams:
/// pairs straddling the edge of its rectangle, or straddling the edge of its
/// foreground inside the rectangle. Pairs leaving the canvas are skipped.
pub fn seam_contrast(img: &GrayImage, mask: &ForegroundMask, pos: Position) -> u8 {
    let inside_rect =
        |r: usize, c: usize| r >= pos.row && c >= pos.col && r < pos.row + mask.rows() && c < pos.col + mask.cols();
    let fg = |r: usize, c: usize| inside_rect(r, c) && mask.get(r - pos.row, c - pos.col);

    let mut worst = 0u8;
    for i in 0..mask.rows() {
        for j in 0..mask.cols() {
            let (r, c) = (pos.row + i, pos.col + j);
            if !img.contains(r, c) {
                continue;
            }
            let here_fg = mask.get(i, j);
            let neighbours = [(r.wrapping_sub(1), c), (r + 1, c), (r, c.wrapping_sub(1)), (r, c + 1)];
            for (nr, nc) in neighbours {
                if !img.contains(nr, nc) {
                    continue;
                }
                if !inside_rect(nr, nc) || fg(nr, nc) != here_fg {
                    worst = worst.max(img.get(r, c).abs_diff(img.get(nr, nc)));
                }
            }
        }
    }
    worst
}
