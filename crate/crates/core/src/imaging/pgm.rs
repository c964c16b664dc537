//! Binary PGM (`P5`) codec, 8-bit only.

use super::{GrayImage, ImagingError};

/// Parses a binary PGM. Header fields may be separated by arbitrary
/// whitespace and `#` comments; exactly one whitespace byte separates the
/// maxval from the raster. Bytes after the raster are ignored.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, ImagingError> {
    let mut cursor = Header { bytes, pos: 0 };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(ImagingError::MalformedHeader("missing P5 magic number".into()));
    }
    cursor.pos = 2;
    let cols = cursor.next_number("width")?;
    let rows = cursor.next_number("height")?;
    let maxval = cursor.next_number("maxval")?;
    if maxval == 0 {
        return Err(ImagingError::MalformedHeader("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(ImagingError::UnsupportedMaxval(maxval));
    }
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => {
            return Err(ImagingError::MalformedHeader(
                "expected a single whitespace byte after maxval".into(),
            ))
        }
    }
    let (rows, cols) = (rows as usize, cols as usize);
    if rows == 0 || cols == 0 {
        return Err(ImagingError::MalformedHeader(format!(
            "image dimensions {cols}x{rows} must be non-zero"
        )));
    }
    let expected = rows
        .checked_mul(cols)
        .ok_or_else(|| ImagingError::MalformedHeader("image dimensions overflow".into()))?;
    let raster = &bytes[cursor.pos..];
    if raster.len() < expected {
        return Err(ImagingError::TruncatedPixelData {
            expected,
            found: raster.len(),
        });
    }
    GrayImage::new(rows, cols, raster[..expected].to_vec())
}

/// Canonical encoding: `"P5\n<cols> <rows>\n255\n"` followed by the raw
/// row-major pixels.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.cols(), img.rows());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, field: &str) -> Result<u32, ImagingError> {
        let start = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == start {
            return Err(ImagingError::MalformedHeader(format!(
                "expected whitespace before {field}"
            )));
        }
        let digits_start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(ImagingError::MalformedHeader(format!("missing {field}")));
        }
        std::str::from_utf8(&self.bytes[digits_start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImagingError::MalformedHeader(format!("{field} out of range")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_minimal_image() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 7]);
        let img = read_pgm(&bytes).unwrap();
        assert_eq!((img.rows(), img.cols()), (2, 2));
        assert_eq!(img.pixels(), &[0, 255, 128, 7]);
        assert_eq!(write_pgm(&img), bytes);
    }

    #[test]
    fn writes_canonical_single_pixel() {
        let img = GrayImage::filled(1, 1, 0).unwrap();
        assert_eq!(write_pgm(&img), b"P5\n1 1\n255\n\x00".to_vec());
        assert_eq!(write_pgm(&img), write_pgm(&img));
    }

    #[test]
    fn width_is_cols_height_is_rows() {
        let img = GrayImage::filled(112, 92, 9).unwrap();
        let bytes = write_pgm(&img);
        assert!(bytes.starts_with(b"P5\n92 112\n255\n"));
        let back = read_pgm(&bytes).unwrap();
        assert_eq!((back.rows(), back.cols()), (112, 92));
    }

    #[test]
    fn accepts_comments_and_loose_whitespace() {
        let mut bytes = b"P5 # made by hand\n# another\n  3\t1 # w h\n255\r".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        let img = read_pgm(&bytes).unwrap();
        assert_eq!((img.rows(), img.cols()), (1, 3));
        assert_eq!(img.pixels(), &[1, 2, 3]);
    }

    #[test]
    fn keeps_raw_values_for_small_maxval() {
        let mut bytes = b"P5\n2 1\n15\n".to_vec();
        bytes.extend_from_slice(&[3, 15]);
        assert_eq!(read_pgm(&bytes).unwrap().pixels(), &[3, 15]);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            read_pgm(b"P2\n1 1\n255\n\0"),
            Err(ImagingError::MalformedHeader(_))
        ));
        assert!(matches!(read_pgm(b""), Err(ImagingError::MalformedHeader(_))));
        assert!(matches!(read_pgm(b"P5\n1\n"), Err(ImagingError::MalformedHeader(_))));
        assert!(matches!(
            read_pgm(b"P5\n0 1\n255\n"),
            Err(ImagingError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_pgm(b"P5\n1 1\n0\n\0"),
            Err(ImagingError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_pgm(b"P51 1 255\n\0"),
            Err(ImagingError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_pgm(b"P5\n1 1\n255"),
            Err(ImagingError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_pgm(b"P5\n99999999999 1\n255\n"),
            Err(ImagingError::MalformedHeader(_))
        ));
    }

    #[test]
    fn wide_maxval_rejected() {
        assert_eq!(
            read_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(ImagingError::UnsupportedMaxval(65535))
        );
    }

    #[test]
    fn truncated_raster() {
        assert_eq!(
            read_pgm(b"P5\n2 2\n255\n\x01\x02"),
            Err(ImagingError::TruncatedPixelData { expected: 4, found: 2 })
        );
    }

    proptest! {
        #[test]
        fn round_trip(rows in 1usize..20, cols in 1usize..20, seed in any::<u64>()) {
            let mut state = seed;
            let img = GrayImage::from_fn(rows, cols, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 56) as u8
            }).unwrap();
            let bytes = write_pgm(&img);
            let back = read_pgm(&bytes).unwrap();
            prop_assert_eq!(&back, &img);
            prop_assert_eq!(write_pgm(&back), bytes);
        }
    }
}
