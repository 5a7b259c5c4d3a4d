//! Automated skin tone rating of single face crops: fallback skin mask,
//! YCbCr chroma filter, mean color, ITA and the six-way label.
//!
//!     cargo run --example rate_face [-- face.png [skin_mask.png]]
//!
//! Without arguments a few synthetic crops are rated.

mod support;

use std::path::Path;

use anyhow::Result;
use skintone::colorspace::{lab_to_rgb, Lab, Rgb8};
use skintone::io;
use skintone::skin::{rate_image, RateConfig};
use skintone::SkinToneResult;

fn show(r: &SkinToneResult) {
    let flags: Vec<_> = r.flags.iter().map(|f| f.as_str()).collect();
    println!(
        "{:<12} ITA {:7.2}°  {:<13} Lab ({:5.1},{:5.1},{:5.1})  {} skin px, {} rejected  [{}]",
        r.image_id,
        r.ita.value(),
        r.label.name(),
        r.mean_lab.l,
        r.mean_lab.a,
        r.mean_lab.b,
        r.skin_pixel_count,
        r.filtered_out_count,
        flags.join(",")
    );
}

fn main() -> Result<()> {
    let cfg = RateConfig::default();
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Some(face) = args.first() {
        let img = io::load_rgb(Path::new(face))?;
        let mask = args.get(1).map(|p| io::load_mask(Path::new(p))).transpose()?;
        show(&rate_image(face, &img, mask.as_ref(), &cfg)?);
        return Ok(());
    }

    for (l, b) in [(75.0, 10.0), (62.0, 17.0), (55.0, 20.0), (45.0, 22.0), (32.0, 18.0)] {
        let skin = lab_to_rgb(Lab::new(l, 14.0, b));
        let crop = support::face_crop(160, skin, Rgb8::gray(119));
        show(&rate_image(&format!("L{l}_b{b}"), &crop, None, &cfg)?);
    }

    // A small crop still rates, but is flagged.
    let small = support::face_crop(32, lab_to_rgb(Lab::new(60.0, 15.0, 20.0)), Rgb8::gray(119));
    show(&rate_image("small", &small, None, &cfg)?);

    // No pixel passes the chroma filter on a gray card.
    let gray = skintone::RgbImage::filled(64, 64, Rgb8::gray(119))?;
    match rate_image("gray", &gray, None, &cfg) {
        Ok(r) => show(&r),
        Err(e) => println!("{:<12} error: {e} ({})", "gray", e.code()),
    }
    Ok(())
}
