//! Color conversions behind the skin tone measurement: full-range BT.601
//! YCbCr for the skin filter, CIELab (D65) and the individual typology
//! angle (ITA) for classification.
//!
//!     cargo run --example color_conversions

use skintone::colorspace::{ita, ita_in_model, lab_to_rgb, rgb_to_lab, rgb_to_ycbcr, Lab, Rgb8};
use skintone::skin::{classify_ita, skin_pixel_filter, ItaRangeTable, LOW_CHROMA_LIMIT};

fn main() {
    let table = ItaRangeTable::standard();
    let swatches = [
        ("18% gray", Rgb8::gray(119)),
        ("porcelain", Rgb8::new(247, 222, 205)),
        ("light", Rgb8::new(232, 190, 160)),
        ("medium", Rgb8::new(198, 134, 103)),
        ("deep", Rgb8::new(141, 85, 36)),
        ("very deep", Rgb8::new(70, 42, 30)),
        ("blue", Rgb8::new(40, 60, 200)),
    ];

    println!(
        "{:<10} {:>15}  {:>20}  {:>22}  {:>7}  label",
        "swatch", "rgb", "ycbcr", "lab", "ita"
    );
    for (name, rgb) in swatches {
        let ycc = rgb_to_ycbcr(rgb);
        let lab = rgb_to_lab(rgb);
        let angle = ita(lab);
        let label = classify_ita(angle, &table);
        let mut notes = Vec::new();
        if !skin_pixel_filter(ycc) {
            notes.push("outside skin chroma box");
        }
        if lab.b.abs() < LOW_CHROMA_LIMIT && (lab.l - 50.0).abs() < LOW_CHROMA_LIMIT {
            notes.push("low chroma, angle unstable");
        }
        if !ita_in_model(lab) {
            notes.push("b < 0, outside the model");
        }
        println!(
            "{name:<10} {:>15}  ({:5.1},{:5.1},{:5.1})  ({:6.2},{:6.2},{:6.2})  {:6.2}°  {} {}",
            format!("({},{},{})", rgb.r, rgb.g, rgb.b),
            ycc.y,
            ycc.cb,
            ycc.cr,
            lab.l,
            lab.a,
            lab.b,
            angle.value(),
            label.name(),
            notes.join(", ")
        );
    }

    // ITA only depends on L and b: the same angle for any a.
    println!();
    for a in [0.0, 10.0, 20.0] {
        let lab = Lab::new(60.0, a, 20.0);
        println!(
            "Lab(60, {a:>4}, 20) -> {:.3}°, sRGB {:?}",
            ita(lab).value(),
            lab_to_rgb(lab)
        );
    }

    println!("\nstandard ITA ranges:");
    for label in skintone::SkinTypeLabel::ALL {
        let (lo, hi) = table.cell(label);
        println!("  {:>3} {:<13} [{lo:>6.1}°, {hi:>5.1}°)", label.roman(), label.name());
    }
}
