//! Pixel substrate: 8-bit grayscale rasters, boolean foreground masks,
//! binary PGM serialization, thresholding and 3×3 neighborhood sums.
//!
//! Coordinates are `(row, col)`, zero-based, rows growing downward.

mod pgm;
mod threshold;

pub use pgm::{read_pgm, write_pgm};
pub use threshold::{binarize, component_mask, face_mask, otsu_threshold, BinaryImage, Threshold};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImagingError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    TruncatedPixelData { expected: usize, found: usize },
    #[error("unsupported maxval {0} (only 8-bit PGM is supported)")]
    UnsupportedMaxval(u32),
    #[error("invalid dimensions {rows}x{cols}: {reason}")]
    InvalidDimensions {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },
    #[error("histogram has a single intensity level; an explicit threshold is required")]
    DegenerateHistogram,
    #[error("mask has no foreground pixel")]
    EmptyMask,
    #[error("position ({row}, {col}) is outside a {rows}x{cols} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// Row-major 8-bit single-channel raster. 0 is black, 255 is white.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        check_dims(rows, cols, pixels.len())?;
        Ok(Self { rows, cols, pixels })
    }

    /// An image with every pixel set to `value`.
    pub fn filled(rows: usize, cols: usize, value: u8) -> Result<Self, ImagingError> {
        Self::new(rows, cols, vec![value; rows.saturating_mul(cols)])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self, ImagingError> {
        let mut pixels = Vec::with_capacity(rows.saturating_mul(cols));
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        Self::new(rows, cols, pixels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols
    }

    /// Panics when `(row, col)` is outside the image.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        assert!(self.contains(row, col), "pixel ({row}, {col}) out of range");
        self.pixels[row * self.cols + col]
    }

    /// Panics when `(row, col)` is outside the image.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        assert!(self.contains(row, col), "pixel ({row}, {col}) out of range");
        self.pixels[row * self.cols + col] = value;
    }

    /// Histogram over the 256 intensity levels.
    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &p in &self.pixels {
            hist[p as usize] += 1;
        }
        hist
    }
}

/// Which rule produced a [`ForegroundMask`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskPolarity {
    /// Foreground is `intensity > threshold` (bright objects, face cuttings).
    Brighter { threshold: u8 },
    /// Foreground is `intensity <= threshold` (dark objects, facial parts).
    DarkerOrEqual { threshold: u8 },
    /// Bits supplied directly by the caller.
    Explicit,
}

/// Boolean raster where `true` always marks pixels belonging to the object,
/// whichever binarization rule produced it.
#[derive(Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
    polarity: MaskPolarity,
}

impl std::fmt::Debug for ForegroundMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForegroundMask")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("foreground", &self.count())
            .field("polarity", &self.polarity)
            .finish()
    }
}

impl ForegroundMask {
    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self, ImagingError> {
        Self::with_polarity(rows, cols, bits, MaskPolarity::Explicit)
    }

    pub(crate) fn with_polarity(
        rows: usize,
        cols: usize,
        bits: Vec<bool>,
        polarity: MaskPolarity,
    ) -> Result<Self, ImagingError> {
        check_dims(rows, cols, bits.len())?;
        Ok(Self {
            rows,
            cols,
            bits,
            polarity,
        })
    }

    /// Mask with every bit set.
    pub fn full(rows: usize, cols: usize) -> Result<Self, ImagingError> {
        Self::from_bits(rows, cols, vec![true; rows.saturating_mul(cols)])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self, ImagingError> {
        let mut bits = Vec::with_capacity(rows.saturating_mul(cols));
        for r in 0..rows {
            for c in 0..cols {
                bits.push(f(r, c));
            }
        }
        Self::from_bits(rows, cols, bits)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn polarity(&self) -> MaskPolarity {
        self.polarity
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "bit ({row}, {col}) out of range");
        self.bits[row * self.cols + col]
    }

    /// Number of foreground bits.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Foreground positions in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / cols, i % cols))
    }
}

fn check_dims(rows: usize, cols: usize, len: usize) -> Result<(), ImagingError> {
    if rows == 0 || cols == 0 {
        return Err(ImagingError::InvalidDimensions {
            rows,
            cols,
            reason: "both dimensions must be at least 1",
        });
    }
    if rows.checked_mul(cols) != Some(len) {
        return Err(ImagingError::InvalidDimensions {
            rows,
            cols,
            reason: "buffer length does not equal rows x cols",
        });
    }
    Ok(())
}

/// Sum of the 3×3 window centred on `(row, col)`. Coordinates falling off the
/// image are clamped to the nearest edge pixel (replicated border).
pub fn neighborhood_sum(img: &GrayImage, row: usize, col: usize) -> Result<u32, ImagingError> {
    if !img.contains(row, col) {
        return Err(ImagingError::OutOfBounds {
            row,
            col,
            rows: img.rows,
            cols: img.cols,
        });
    }
    let rows = [row.saturating_sub(1), row, (row + 1).min(img.rows - 1)];
    let cols = [col.saturating_sub(1), col, (col + 1).min(img.cols - 1)];
    let mut sum = 0u32;
    for &r in &rows {
        let base = r * img.cols;
        for &c in &cols {
            sum += u32::from(img.pixels[base + c]);
        }
    }
    Ok(sum)
}
