//! Global thresholding and the two mask constructors.
//!
//! `face_mask` keeps the bright side (the face/ear region of a cutting),
//! `component_mask` keeps the dark side (the eye, brow, nose or lip drawn on
//! a lighter crop). Both return masks where `true` marks the object.

use super::{ForegroundMask, GrayImage, ImagingError, MaskPolarity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threshold {
    /// Otsu's between-class-variance maximizer over the 256-bin histogram.
    #[default]
    Automatic,
    Explicit(u8),
}

/// Raw binarization result: `bits[i]` is `pixel > threshold`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub threshold: u8,
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<bool>,
}

/// Otsu threshold `t`: pixels `<= t` form one class and `> t` the other.
/// Ties resolve to the smallest `t`.
pub fn otsu_threshold(img: &GrayImage) -> Result<u8, ImagingError> {
    let hist = img.histogram();
    let total = img.pixels().len() as f64;
    let total_sum: f64 = hist.iter().enumerate().map(|(level, &n)| level as f64 * n as f64).sum();

    let mut best: Option<(u8, f64)> = None;
    let mut below = 0.0;
    let mut below_sum = 0.0;
    for (t, &count) in hist.iter().enumerate().take(255) {
        below += count as f64;
        below_sum += t as f64 * count as f64;
        let above = total - below;
        if below == 0.0 || above == 0.0 {
            continue;
        }
        let mean_diff = below_sum / below - (total_sum - below_sum) / above;
        let variance = below * above * mean_diff * mean_diff;
        if best.is_none_or(|(_, v)| variance > v) {
            best = Some((t as u8, variance));
        }
    }
    best.map(|(t, _)| t).ok_or(ImagingError::DegenerateHistogram)
}

pub fn binarize(img: &GrayImage, threshold: Threshold) -> Result<BinaryImage, ImagingError> {
    let t = resolve(img, threshold)?;
    Ok(BinaryImage {
        threshold: t,
        rows: img.rows(),
        cols: img.cols(),
        bits: img.pixels().iter().map(|&p| p > t).collect(),
    })
}

/// Foreground = pixels brighter than the threshold.
pub fn face_mask(img: &GrayImage, threshold: Threshold) -> Result<ForegroundMask, ImagingError> {
    let t = resolve(img, threshold)?;
    let bits = img.pixels().iter().map(|&p| p > t).collect();
    non_empty(ForegroundMask::with_polarity(
        img.rows(),
        img.cols(),
        bits,
        MaskPolarity::Brighter { threshold: t },
    )?)
}

/// Foreground = pixels at or below the threshold.
pub fn component_mask(img: &GrayImage, threshold: Threshold) -> Result<ForegroundMask, ImagingError> {
    let t = resolve(img, threshold)?;
    let bits = img.pixels().iter().map(|&p| p <= t).collect();
    non_empty(ForegroundMask::with_polarity(
        img.rows(),
        img.cols(),
        bits,
        MaskPolarity::DarkerOrEqual { threshold: t },
    )?)
}

fn resolve(img: &GrayImage, threshold: Threshold) -> Result<u8, ImagingError> {
    match threshold {
        Threshold::Automatic => otsu_threshold(img),
        Threshold::Explicit(t) => Ok(t),
    }
}

fn non_empty(mask: ForegroundMask) -> Result<ForegroundMask, ImagingError> {
    if mask.is_empty() {
        Err(ImagingError::EmptyMask)
    } else {
        Ok(mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gradient_4x4() -> GrayImage {
        GrayImage::from_fn(4, 4, |r, c| ((r * 4 + c) * 17) as u8).unwrap()
    }

    #[test]
    fn constant_image_is_degenerate() {
        let img = GrayImage::filled(5, 5, 77).unwrap();
        assert_eq!(
            binarize(&img, Threshold::Automatic),
            Err(ImagingError::DegenerateHistogram)
        );
        assert_eq!(
            face_mask(&img, Threshold::Automatic),
            Err(ImagingError::DegenerateHistogram)
        );
        // explicit thresholds still work
        assert!(binarize(&img, Threshold::Explicit(10)).unwrap().bits.iter().all(|&b| b));
    }

    #[test]
    fn two_level_image() {
        let img = GrayImage::from_fn(6, 6, |r, c| if (r + c) % 3 == 0 { 255 } else { 0 }).unwrap();
        let bin = binarize(&img, Threshold::Automatic).unwrap();
        assert!(bin.threshold <= 254);
        for (bit, &p) in bin.bits.iter().zip(img.pixels()) {
            assert_eq!(*bit, p == 255);
        }
    }

    #[test]
    fn explicit_threshold_on_gradient() {
        let img = gradient_4x4();
        let bin = binarize(&img, Threshold::Explicit(128)).unwrap();
        assert_eq!(bin.threshold, 128);
        // brute force: 0,17,...,255; >= 129 means indices 8..16
        let expected: Vec<bool> = (0..16).map(|i| i * 17 >= 129).collect();
        assert_eq!(bin.bits, expected);
        assert_eq!(bin.bits.iter().filter(|&&b| b).count(), 8);
    }

    #[test]
    fn otsu_splits_bimodal_clusters() {
        let img = GrayImage::from_fn(10, 10, |r, _| if r < 3 { 40 + r as u8 } else { 200 + r as u8 }).unwrap();
        let t = otsu_threshold(&img).unwrap();
        assert!((42..203).contains(&t), "threshold {t}");
    }

    #[test]
    fn face_mask_keeps_bright_oval() {
        let inside = |r: usize, c: usize| {
            let dr = (r as f64 - 10.0) / 8.0;
            let dc = (c as f64 - 8.0) / 5.0;
            dr * dr + dc * dc <= 1.0
        };
        let img = GrayImage::from_fn(21, 17, |r, c| if inside(r, c) { 255 } else { 0 }).unwrap();
        let mask = face_mask(&img, Threshold::Automatic).unwrap();
        for r in 0..21 {
            for c in 0..17 {
                assert_eq!(mask.get(r, c), inside(r, c));
            }
        }
        assert!(matches!(mask.polarity(), MaskPolarity::Brighter { .. }));
    }

    #[test]
    fn component_mask_keeps_dark_ellipse() {
        let inside = |r: usize, c: usize| {
            let dr = (r as f64 - 5.0) / 4.0;
            let dc = (c as f64 - 9.0) / 7.0;
            dr * dr + dc * dc <= 1.0
        };
        let img = GrayImage::from_fn(11, 19, |r, c| if inside(r, c) { 0 } else { 255 }).unwrap();
        let mask = component_mask(&img, Threshold::Automatic).unwrap();
        for r in 0..11 {
            for c in 0..19 {
                assert_eq!(mask.get(r, c), inside(r, c));
            }
        }
    }

    #[test]
    fn empty_masks() {
        let black = GrayImage::filled(4, 4, 0).unwrap();
        assert_eq!(face_mask(&black, Threshold::Explicit(0)), Err(ImagingError::EmptyMask));
        let white = GrayImage::filled(4, 4, 255).unwrap();
        assert_eq!(
            component_mask(&white, Threshold::Explicit(254)),
            Err(ImagingError::EmptyMask)
        );
        assert_eq!(
            face_mask(&black, Threshold::Automatic),
            Err(ImagingError::DegenerateHistogram)
        );
    }

    fn image_strategy() -> impl Strategy<Value = GrayImage> {
        (1usize..10, 1usize..10).prop_flat_map(|(r, c)| {
            proptest::collection::vec(any::<u8>(), r * c).prop_map(move |px| GrayImage::new(r, c, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn raising_threshold_never_adds_foreground(img in image_strategy(), a in any::<u8>(), b in any::<u8>()) {
            let (lo, hi) = (a.min(b), a.max(b));
            let low = binarize(&img, Threshold::Explicit(lo)).unwrap();
            let high = binarize(&img, Threshold::Explicit(hi)).unwrap();
            for (h, l) in high.bits.iter().zip(&low.bits) {
                prop_assert!(!h || *l);
            }
        }

        #[test]
        fn face_and_component_masks_are_complements(img in image_strategy(), t in any::<u8>()) {
            let face = face_mask(&img, Threshold::Explicit(t));
            let comp = component_mask(&img, Threshold::Explicit(t));
            match (face, comp) {
                (Ok(f), Ok(c)) => {
                    for (x, y) in f.bits().iter().zip(c.bits()) {
                        prop_assert_ne!(x, y);
                    }
                }
                (Err(ImagingError::EmptyMask), Ok(c)) => prop_assert!(c.bits().iter().all(|&b| b)),
                (Ok(f), Err(ImagingError::EmptyMask)) => prop_assert!(f.bits().iter().all(|&b| b)),
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }

        #[test]
        fn otsu_count_matches_recount(img in image_strategy()) {
            if let Ok(t) = otsu_threshold(&img) {
                let mask = component_mask(&img, Threshold::Automatic).unwrap();
                let recount = img.pixels().iter().filter(|&&p| p <= t).count();
                prop_assert_eq!(mask.count(), recount);
            }
        }

        #[test]
        fn binarize_is_deterministic(img in image_strategy()) {
            prop_assert_eq!(binarize(&img, Threshold::Automatic), binarize(&img, Threshold::Automatic));
        }
    }
}
