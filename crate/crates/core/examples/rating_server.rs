//! The exemplar-guided rating service on demo data. Writes six exemplar
//! swatches and a handful of synthetic faces, then serves the rating API
//! (and the UI bundle, if given) until Ctrl-C.
//!
//!     cargo run --example rating_server [-- ui_dist_dir]
//!
//! Then, for instance:
//!
//!     curl 'localhost:8080/api/next?rater=demo&variant=exemplar_corrected'
//!     curl -X POST localhost:8080/api/ratings -H 'content-type: application/json' \
//!          -d '{"image_id":"face00","rater_id":"demo","fst":3,"tool_variant":"exemplar_corrected"}'
//!     curl localhost:8080/api/export

mod support;

use std::path::PathBuf;

use anyhow::Result;
use skintone::colorspace::{lab_to_rgb, Lab};
use skintone::io::{self, ManifestRow};
use skintone::service::{Exemplar, ExemplarSet, RatingService, ServiceConfig};
use skintone::{RgbImage, SkinTypeLabel};

#[tokio::main]
async fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let dir = std::env::temp_dir().join("skintone-rating-demo");
    std::fs::create_dir_all(&dir)?;

    // One swatch per skin type, lightest first.
    let mut exemplars = Vec::new();
    for (label, l) in SkinTypeLabel::ALL.into_iter().zip([80.0, 68.0, 58.0, 50.0, 40.0, 28.0]) {
        let path = dir.join(format!("exemplar_{}.png", label.ordinal()));
        io::save_png(&path, &RgbImage::filled(96, 96, lab_to_rgb(Lab::new(l, 12.0, 18.0)))?)?;
        exemplars.push(Exemplar {
            label,
            path,
            source: "synthetic swatch".into(),
        });
    }

    let mut images = Vec::new();
    for i in 0..8 {
        let skin = lab_to_rgb(Lab::new(30.0 + 6.5 * i as f64, 13.0, 18.0));
        let cast = [105.0 + 3.0 * i as f64, 115.0, 132.0 - 2.0 * i as f64];
        let path = dir.join(format!("face{i:02}.png"));
        io::save_png(&path, &support::cast_face_crop(240, skin, cast))?;
        images.push(ManifestRow {
            image_id: format!("face{i:02}"),
            face_path: path,
            skin_mask_path: None,
            bg_mask_path: None,
        });
    }

    let mut cfg = ServiceConfig::new(
        images,
        ExemplarSet::new(exemplars)?,
        vec!["demo".into(), "alice".into(), "bob".into()],
        dir.join("ratings.jsonl"),
    );
    cfg.ui_dir = std::env::args().nth(1).map(PathBuf::from);
    let service = RatingService::new(cfg)?;
    println!("rating log: {}", dir.join("ratings.jsonl").display());
    skintone::service::serve(service, "127.0.0.1:8080".parse()?).await?;
    Ok(())
}
