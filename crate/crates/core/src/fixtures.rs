//! Deterministic synthetic catalogs.
//!
//! Every image is drawn from simple shapes on a 92×112 cutting canvas (or a
//! small light card for facial parts), with sizes and tones driven by the
//! record's attributes. The same seed always yields byte-identical files.
//!
//! Each kind gets one record shaped after the first reference description
//! ([`reference_query`]), one after the second ([`second_query`]) and
//! `extra_per_kind` records with random attributes.

use std::io;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{assignment, Assignment, Catalog, CatalogError, ComponentKind, FaceQuery, CANT_SAY};
use crate::imaging::GrayImage;

pub const CUTTING_ROWS: usize = 112;
pub const CUTTING_COLS: usize = 92;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub extra_per_kind: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 7,
            extra_per_kind: 2,
        }
    }
}

/// Male, 21-30, oval face; large highly dense brows; normal elliptic black
/// eyes; all-normal nose; normal smooth lips. The brow shape is left open.
pub fn reference_query() -> FaceQuery {
    let brow = assignment([("Length", "Large"), ("Width", "Normal"), ("Hair", "Highly Dense")]);
    let eye = assignment([
        ("Length", "Normal"),
        ("Width", "Normal"),
        ("Shape", "Elliptic"),
        ("EyeBollColor", "Black"),
    ]);
    FaceQuery::from([
        (
            ComponentKind::FaceCutting,
            assignment([
                ("Sex", "Male"),
                ("Age", "21-30"),
                ("Shape", "Oval"),
                ("Jaw", "Normal"),
                ("HairDensity", "Normal"),
                ("HairColor", "Black"),
            ]),
        ),
        (ComponentKind::RightEyebrow, brow.clone()),
        (ComponentKind::LeftEyebrow, brow),
        (ComponentKind::RightEye, eye.clone()),
        (ComponentKind::LeftEye, eye),
        (ComponentKind::Nose, normal_nose()),
        (
            ComponentKind::Lip,
            assignment([
                ("Length", "Normal"),
                ("Surface", "Smooth"),
                ("Mouth", CANT_SAY),
                ("Shape", CANT_SAY),
            ]),
        ),
    ])
}

/// Male, 31-40, oval face with dense black hair; small flat sparse brows;
/// a narrower right eye; all-normal nose; closed wavy lips.
pub fn second_query() -> FaceQuery {
    let brow = assignment([
        ("Length", "Small"),
        ("Width", "Small"),
        ("Shape", "Flat"),
        ("Hair", "Low Dense"),
    ]);
    FaceQuery::from([
        (
            ComponentKind::FaceCutting,
            assignment([
                ("Sex", "Male"),
                ("Age", "31-40"),
                ("Shape", "Oval"),
                ("Jaw", "Normal"),
                ("HairDensity", "Highly Dense"),
                ("HairColor", "Black"),
            ]),
        ),
        (ComponentKind::RightEyebrow, brow.clone()),
        (ComponentKind::LeftEyebrow, brow),
        (
            ComponentKind::RightEye,
            assignment([
                ("Length", "Normal"),
                ("Width", "Small"),
                ("Shape", "Elliptic"),
                ("EyeBollColor", "Black"),
            ]),
        ),
        (
            ComponentKind::LeftEye,
            assignment([
                ("Length", "Normal"),
                ("Width", "Normal"),
                ("Shape", "Elliptic"),
                ("EyeBollColor", "Black"),
            ]),
        ),
        (ComponentKind::Nose, normal_nose()),
        (
            ComponentKind::Lip,
            assignment([
                ("Length", "Normal"),
                ("Width", "Normal"),
                ("Surface", "Smooth"),
                ("Mouth", "Closed"),
                ("Shape", "Wavy"),
            ]),
        ),
    ])
}

fn normal_nose() -> Assignment {
    assignment([
        ("Sharpness", "Normal"),
        ("Nostrils", "Normal"),
        ("Length", "Normal"),
        ("Width", "Normal"),
    ])
}

/// Writes a fresh fixture catalog into `root`, which must not already hold
/// a catalog.
pub fn generate_catalog(root: &Path, spec: &FixtureSpec) -> Result<Catalog, CatalogError> {
    if root.join(crate::catalog::MANIFEST_FILE).exists() {
        return Err(CatalogError::Io(io::Error::new(
            io::ErrorKind::AlreadyExists,
            format!("{} already holds a catalog", root.display()),
        )));
    }
    let mut catalog = Catalog::open(root)?;
    let mut rng = Rng(ChaCha8Rng::seed_from_u64(spec.seed));
    let (t1, t2) = (reference_query(), second_query());
    for kind in ComponentKind::ALL {
        let mut records = vec![
            complete(kind, &t1[&kind], &mut rng),
            complete(kind, &t2[&kind], &mut rng),
        ];
        for _ in 0..spec.extra_per_kind {
            records.push(random_attributes(kind, &mut rng));
        }
        for attrs in records {
            let image = draw(kind, &attrs, &mut rng);
            catalog.ingest_image(image, kind, attrs)?;
        }
    }
    Ok(catalog)
}

/// Draws one component image for `attrs`; `seed` varies tone and jitter.
pub fn draw_component(kind: ComponentKind, attrs: &Assignment, seed: u64) -> GrayImage {
    draw(kind, attrs, &mut Rng(ChaCha8Rng::seed_from_u64(seed)))
}

/// Fills attributes the description leaves open with "Cant Say", or a random
/// value where the schema has no wildcard.
fn complete(kind: ComponentKind, partial: &Assignment, rng: &mut Rng) -> Assignment {
    kind.attributes()
        .iter()
        .map(|def| {
            let value = match partial.get(def.name) {
                Some(v) if v != CANT_SAY || def.allows(CANT_SAY) => v.clone(),
                _ if def.allows(CANT_SAY) => CANT_SAY.to_string(),
                _ => def.values[rng.below(def.values.len())].to_string(),
            };
            (def.name.to_string(), value)
        })
        .collect()
}

fn random_attributes(kind: ComponentKind, rng: &mut Rng) -> Assignment {
    kind.attributes()
        .iter()
        .map(|def| {
            (
                def.name.to_string(),
                def.values[rng.below(def.values.len())].to_string(),
            )
        })
        .collect()
}

/// Integer draws built directly on the ChaCha stream so the output does not
/// depend on `rand`'s range-sampling algorithm.
struct Rng(ChaCha8Rng);

impl Rng {
    fn below(&mut self, n: usize) -> usize {
        (self.0.next_u32() as usize) % n
    }

    /// Uniform in `lo..=hi`.
    fn between(&mut self, lo: i32, hi: i32) -> i32 {
        lo + (self.0.next_u32() % (hi - lo + 1) as u32) as i32
    }
}

fn pick<'a>(attrs: &'a Assignment, name: &str) -> &'a str {
    attrs.get(name).map_or(CANT_SAY, String::as_str)
}

fn size3(value: &str, small: i32, normal: i32, large: i32) -> i32 {
    match value {
        "Small" | "Thin" => small,
        "Large" | "Wide" | "Thick" => large,
        _ => normal,
    }
}

struct Canvas {
    rows: usize,
    cols: usize,
    px: Vec<i32>,
}

impl Canvas {
    fn new(rows: usize, cols: usize, value: i32) -> Self {
        Canvas {
            rows,
            cols,
            px: vec![value; rows * cols],
        }
    }

    fn set(&mut self, r: i32, c: i32, v: i32) {
        if r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols {
            self.px[r as usize * self.cols + c as usize] = v;
        }
    }

    fn ellipse(&mut self, cr: f64, cc: f64, ar: f64, ac: f64, v: i32) {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let (dr, dc) = ((r as f64 - cr) / ar, (c as f64 - cc) / ac);
                if dr * dr + dc * dc <= 1.0 {
                    self.px[r * self.cols + c] = v;
                }
            }
        }
    }

    fn jitter(&mut self, rng: &mut Rng, amount: i32, only: impl Fn(i32) -> bool) {
        for p in &mut self.px {
            if only(*p) {
                *p += rng.between(-amount, amount);
            }
        }
    }

    fn finish(self) -> GrayImage {
        let px = self.px.into_iter().map(|v| v.clamp(0, 255) as u8).collect();
        GrayImage::new(self.rows, self.cols, px).expect("canvas dimensions are valid")
    }
}

fn draw(kind: ComponentKind, attrs: &Assignment, rng: &mut Rng) -> GrayImage {
    match kind {
        ComponentKind::FaceCutting => draw_cutting(attrs, rng),
        ComponentKind::RightEyebrow | ComponentKind::LeftEyebrow => draw_eyebrow(attrs, rng),
        ComponentKind::RightEye | ComponentKind::LeftEye => draw_eye(attrs, rng),
        ComponentKind::Nose => draw_nose(attrs, rng),
        ComponentKind::Lip => draw_lip(attrs, rng),
    }
}

/// Dark background, bright oval face, hair cap, and a right ear (image left)
/// whose flat-topped outer edge gives a crisp upper-left corner.
fn draw_cutting(attrs: &Assignment, rng: &mut Rng) -> GrayImage {
    let background = rng.between(15, 35);
    let skin = rng.between(165, 190);
    let mut cv = Canvas::new(CUTTING_ROWS, CUTTING_COLS, background);

    let face_rows = match pick(attrs, "Shape") {
        "Round" => 38.0,
        "Oval" => 44.0,
        _ => 41.0,
    };
    let face_cols = match pick(attrs, "Jaw") {
        "Narrow" => 28.0,
        "Wide" => 32.0,
        _ => 30.0,
    };
    let (cr, cc) = (62.0 + f64::from(rng.between(-1, 1)), 46.0);

    let hair = match pick(attrs, "HairColor") {
        "Black" => 40,
        "Brown" => 95,
        _ => 70,
    };
    let hairline = match pick(attrs, "HairDensity") {
        "Highly Dense" => 30.0,
        "Low Dense" => 22.0,
        _ => 26.0,
    };
    cv.ellipse(cr - 4.0, cc, face_rows + 4.0, face_cols + 1.0, hair);
    cv.ellipse(cr, cc, face_rows, face_cols, skin);
    for r in 0..CUTTING_ROWS {
        if (r as f64) < hairline {
            for c in 0..CUTTING_COLS {
                if cv.px[r * CUTTING_COLS + c] == skin {
                    cv.px[r * CUTTING_COLS + c] = hair;
                }
            }
        }
    }

    let ear_top = rng.between(44, 48);
    let ear_left = rng.between(6, 8);
    let ear = skin - 12;
    for d in 0..20 {
        let indent = if d > 10 { (d - 10) / 2 } else { 0 };
        for c in (ear_left + indent)..(ear_left + 13) {
            cv.set(ear_top + d, c, ear);
        }
    }
    cv.jitter(rng, 3, |v| v >= ear);
    cv.finish()
}

fn card(rng: &mut Rng, rows: usize, cols: usize) -> (Canvas, i32) {
    let tone = rng.between(205, 232);
    (Canvas::new(rows, cols, tone), tone)
}

fn draw_eyebrow(attrs: &Assignment, rng: &mut Rng) -> GrayImage {
    let length = size3(pick(attrs, "Length"), 16, 20, 24);
    let thick = size3(pick(attrs, "Width"), 3, 4, 6);
    let tone = match pick(attrs, "Hair") {
        "Highly Dense" => 35,
        "Low Dense" => 85,
        "Normal" => 55,
        _ => 65,
    };
    let (rows, cols) = (thick as usize + 6, length as usize + 2);
    let (mut cv, _) = card(rng, rows, cols);
    let shape = pick(attrs, "Shape").to_string();
    for c in 1..(cols as i32 - 1) {
        let t = f64::from(c - 1) / f64::from(length - 1);
        let lift = match shape.as_str() {
            "Flat" => 0.0,
            "Round" => 2.5 * (std::f64::consts::PI * t).sin(),
            "Wavy" => 1.2 * (3.0 * std::f64::consts::PI * t).sin(),
            "Artistic" => 3.0 * t * (1.0 - t) * 4.0 * (1.0 - 0.5 * t),
            _ => 1.5 * (std::f64::consts::PI * t).sin(),
        };
        let taper = if shape == "Artistic" {
            ((1.0 - t) * f64::from(thick)).ceil() as i32
        } else {
            thick
        };
        let top = 3 + thick / 2 - lift.round() as i32;
        for d in 0..taper.max(1) {
            cv.set(top + d - taper.max(1) / 2, c, tone + rng.between(-4, 4));
        }
    }
    cv.finish()
}

fn draw_eye(attrs: &Assignment, rng: &mut Rng) -> GrayImage {
    let length = size3(pick(attrs, "Length"), 12, 15, 18);
    let height = size3(pick(attrs, "Width"), 6, 8, 10) + if pick(attrs, "Shape") == "Round" { 2 } else { 0 };
    let iris = match pick(attrs, "EyeBollColor") {
        "Black" => 25,
        "Brown" => 55,
        "Green" => 85,
        "Blue" => 105,
        _ => 70,
    };
    let (rows, cols) = (height as usize + 2, length as usize + 2);
    let (mut cv, tone) = card(rng, rows, cols);
    let (cr, cc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let (ar, ac) = (f64::from(height) / 2.0, f64::from(length) / 2.0);
    cv.ellipse(cr, cc, ar, ac, 75);
    cv.ellipse(cr, cc, ar - 1.0, ac - 1.5, tone - 10);
    let iris_r = (ar - 0.5).max(1.5);
    cv.ellipse(cr, cc, iris_r, iris_r, iris);
    cv.ellipse(cr, cc, iris_r / 2.5, iris_r / 2.5, 12);
    cv.jitter(rng, 2, |v| v < 200);
    cv.finish()
}

fn draw_nose(attrs: &Assignment, rng: &mut Rng) -> GrayImage {
    let width = size3(pick(attrs, "Width"), 12, 15, 18);
    let length = size3(pick(attrs, "Length"), 20, 24, 28);
    let nostril = f64::from(size3(pick(attrs, "Nostrils"), 2, 3, 4));
    let ridge = match pick(attrs, "Sharpness") {
        "Sharp" => 85,
        "Blunt" => 140,
        "Normal" => 115,
        _ => 125,
    };
    let (rows, cols) = (length as usize, width as usize);
    let (mut cv, _) = card(rng, rows, cols);
    let mid = (cols as i32 - 1) / 2;
    for r in 2..(rows as i32 - 6) {
        let spread = (r - 2) / 7;
        cv.set(r, mid - 1 - spread, ridge);
        cv.set(r, mid + 1 + spread, ridge);
    }
    let base = rows as f64 - 4.0;
    cv.ellipse(base, f64::from(mid) - nostril - 0.5, 1.6, nostril, 45);
    cv.ellipse(base, f64::from(mid) + nostril + 0.5, 1.6, nostril, 45);
    for c in 1..(cols as i32 - 1) {
        cv.set(rows as i32 - 2, c, 150);
    }
    cv.jitter(rng, 3, |v| v < 200);
    cv.finish()
}

fn draw_lip(attrs: &Assignment, rng: &mut Rng) -> GrayImage {
    let length = size3(pick(attrs, "Length"), 18, 24, 30);
    let height = size3(pick(attrs, "Width"), 8, 10, 13);
    let (rows, cols) = (height as usize + 2, length as usize + 2);
    let (mut cv, tone) = card(rng, rows, cols);
    let (cr, cc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let lip = if pick(attrs, "Surface") == "Wrinkled" { 105 } else { 95 };
    cv.ellipse(cr, cc, f64::from(height) / 2.0, f64::from(length) / 2.0, lip);
    if pick(attrs, "Shape") == "Wavy" {
        // cupid's bow notch in the upper lip
        cv.ellipse(1.0, cc, 1.5, 2.0, tone);
    }
    if pick(attrs, "Surface") == "Wrinkled" {
        for c in (2..cols as i32 - 2).step_by(3) {
            for r in 1..rows as i32 - 1 {
                if cv.px[r as usize * cols + c as usize] == lip {
                    cv.set(r, c, lip - 30);
                }
            }
        }
    }
    let (gap, gap_tone) = match pick(attrs, "Mouth") {
        "Open" => (2, 20),
        _ => (1, 55),
    };
    let mid = cr.round() as i32;
    for c in 2..(cols as i32 - 2) {
        for d in 0..gap {
            cv.set(mid + d, c, gap_tone);
        }
    }
    cv.jitter(rng, 3, |v| v < 200);
    cv.finish()
}
