//! Gray-reference color correction. The backdrop is segmented by flood fill
//! from the corners, its mean is pulled to RGB(119, 119, 119) and the same
//! per-channel factors are applied to the face.
//!
//!     cargo run --example gray_correction [-- out_dir]
//!
//! Output goes to the system temp directory unless `out_dir` is given.

mod support;

use std::path::PathBuf;

use anyhow::Result;
use skintone::colorspace::{ita, rgb_to_lab, Lab};
use skintone::correction::{correct_image, segment_background_fallback, DEFAULT_FLOOD_TOLERANCE};
use skintone::io;

fn main() -> Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("skintone-correction"), PathBuf::from);
    std::fs::create_dir_all(&out)?;

    let skin = skintone::colorspace::lab_to_rgb(Lab::new(60.0, 15.0, 20.0));
    let face = support::cast_face_crop(200, skin, [100.0, 110.0, 130.0]);

    let bg = segment_background_fallback(&face, DEFAULT_FLOOD_TOLERANCE)?;
    println!(
        "background: {} px ({:.1}% of the frame)",
        bg.count(),
        100.0 * bg.coverage()
    );

    let c = correct_image(&face, &bg)?;
    let m = c.background_mean;
    let f = c.factors;
    println!("background mean  ({:.2}, {:.2}, {:.2})", m.r, m.g, m.b);
    println!(
        "factors          ({:.4}, {:.4}, {:.4})",
        f.r_const, f.g_const, f.b_const
    );

    let (x, y) = (100, 90);
    for (name, img) in [("before", &face), ("after", &c.image)] {
        let p = img.get(x, y);
        let lab = rgb_to_lab(p);
        println!(
            "{name:<6} skin pixel ({:3},{:3},{:3})  ITA {:6.2}°",
            p.r,
            p.g,
            p.b,
            ita(lab).value()
        );
    }
    println!(
        "true skin color ({},{},{})  ITA {:6.2}°",
        skin.r,
        skin.g,
        skin.b,
        ita(rgb_to_lab(skin)).value()
    );

    io::save_png(&out.join("cast.png"), &face)?;
    io::save_png(&out.join("corrected.png"), &c.image)?;
    io::save_mask(&out.join("background_mask.png"), &bg)?;
    println!(
        "wrote cast.png, corrected.png and background_mask.png to {}",
        out.display()
    );
    Ok(())
}
