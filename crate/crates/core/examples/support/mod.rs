//! Synthetic face crops shared by the examples.
#![allow(dead_code)]

use skintone::colorspace::Rgb8;
use skintone::skin::SkinMaskGeometry;
use skintone::RgbImage;

pub const EYE: Rgb8 = Rgb8::new(40, 30, 30);
pub const MOUTH: Rgb8 = Rgb8::new(150, 60, 70);

/// An aligned face crop: `skin` over the default face ellipse, dark eyes,
/// a red mouth and a flat `background` backdrop.
pub fn face_crop(size: u32, skin: Rgb8, background: Rgb8) -> RgbImage {
    let g = SkinMaskGeometry::default();
    let s = size as f64;
    RgbImage::from_fn(size, size, |x, y| {
        let (u, v) = ((x as f64 + 0.5) / s, (y as f64 + 0.5) / s);
        if g.contains(u, v) {
            skin
        } else if g.exclusions[..2].iter().any(|r| r.contains(u, v)) {
            EYE
        } else if g.exclusions[2].contains(u, v) {
            MOUTH
        } else {
            background
        }
    })
    .expect("non-empty crop")
}

/// The same crop photographed under a color cast that turns the 18% gray
/// backdrop into `cast`.
pub fn cast_face_crop(size: u32, skin: Rgb8, cast: [f64; 3]) -> RgbImage {
    face_crop(size, skin, Rgb8::gray(119)).map(|p| {
        let f = p.to_f64();
        Rgb8::from_f64([f[0] * cast[0] / 119.0, f[1] * cast[1] / 119.0, f[2] * cast[2] / 119.0])
    })
}
