#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{TimeZone, Utc};
use skintone::colorspace::{lab_to_rgb, Lab, Rgb8};
use skintone::io;
use skintone::ratings::{RatingRecord, ToolVariant};
use skintone::skin::SkinMaskGeometry;
use skintone::{BinaryMask, RgbImage};

/// 8-bit color whose Lab is (60.0, 15.2, 20.1); ITA 26.41°.
pub fn skin_l60_b20() -> Rgb8 {
    lab_to_rgb(Lab::new(60.0, 15.0, 20.0))
}

/// Aligned face crop: the default skin geometry painted `skin`, dark eye
/// boxes, a reddish mouth box and `background` everywhere else.
pub fn face_crop(size: u32, skin: Rgb8, background: Rgb8) -> RgbImage {
    let g = SkinMaskGeometry::default();
    let s = size as f64;
    RgbImage::from_fn(size, size, |x, y| {
        let (u, v) = ((x as f64 + 0.5) / s, (y as f64 + 0.5) / s);
        if g.contains(u, v) {
            skin
        } else if g.exclusions[..2].iter().any(|r| r.contains(u, v)) {
            Rgb8::new(40, 30, 30)
        } else if g.exclusions[2].contains(u, v) {
            Rgb8::new(150, 60, 70)
        } else {
            background
        }
    })
    .unwrap()
}

/// The same crop under a multiplicative color cast that maps 119 gray to
/// `cast`.
pub fn cast_face_crop(size: u32, skin: Rgb8, cast: [f64; 3]) -> RgbImage {
    let clean = face_crop(size, skin, Rgb8::gray(119));
    clean.map(|p| {
        let f = p.to_f64();
        Rgb8::from_f64([f[0] * cast[0] / 119.0, f[1] * cast[1] / 119.0, f[2] * cast[2] / 119.0])
    })
}

pub fn write_manifest(dir: &Path, rows: &[(&str, &str, Option<&str>, Option<&str>)]) -> PathBuf {
    let mut s = String::from("image_id,face_path,skin_mask_path,bg_mask_path\n");
    for (id, face, skin, bg) in rows {
        s.push_str(&format!("{id},{face},{},{}\n", skin.unwrap_or(""), bg.unwrap_or("")));
    }
    let p = dir.join("manifest.csv");
    std::fs::write(&p, s).unwrap();
    p
}

pub fn save(dir: &Path, name: &str, img: &RgbImage) {
    io::save_png(&dir.join(name), img).unwrap();
}

pub fn save_mask(dir: &Path, name: &str, mask: &BinaryMask) {
    io::save_mask(&dir.join(name), mask).unwrap();
}

pub fn record(image: &str, rater: &str, fst: u8, secs: i64) -> RatingRecord {
    RatingRecord {
        image_id: image.into(),
        rater_id: rater.into(),
        fst,
        tool_variant: ToolVariant::ExemplarCorrected,
        timestamp: Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap(),
    }
}

pub fn write_jsonl(path: &Path, records: &[RatingRecord]) {
    let f = std::fs::File::create(path).unwrap();
    io::write_ratings_jsonl(f, records).unwrap();
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}
