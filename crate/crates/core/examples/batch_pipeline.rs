//! The whole file-to-file workflow on a synthetic study: color-cast face
//! crops are corrected, rated automatically, rated by three simulated raters
//! and the two are compared. Every step is the library call behind the
//! matching `skintone` subcommand.
//!
//!     cargo run --example batch_pipeline [-- out_dir]
//!
//! Output goes to the system temp directory unless `out_dir` is given.

mod support;

use std::path::PathBuf;

use anyhow::{Context, Result};
use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skintone::batch::{self, RunConfig, AUTO_RATINGS_FILE, CORRECTED_MANIFEST_FILE};
use skintone::colorspace::{lab_to_rgb, Lab};
use skintone::io::{self, ManifestRow};
use skintone::ratings::{RatingRecord, ToolVariant};

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let root = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("skintone-batch"), PathBuf::from);
    let images = root.join("images");
    std::fs::create_dir_all(&images)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // 1. A study of 24 faces photographed under random casts.
    let mut rows = Vec::new();
    let mut true_lightness = Vec::new();
    for i in 0..24 {
        let l: f64 = rng.random_range(30.0..80.0);
        let skin = lab_to_rgb(Lab::new(l, rng.random_range(8.0..18.0), rng.random_range(10.0..24.0)));
        let cast = [
            rng.random_range(95.0..140.0),
            rng.random_range(95.0..140.0),
            rng.random_range(95.0..140.0),
        ];
        let id = format!("subject{i:02}");
        let file = format!("{id}.png");
        io::save_png(&images.join(&file), &support::cast_face_crop(160, skin, cast))?;
        rows.push(ManifestRow {
            image_id: id,
            face_path: PathBuf::from(file),
            skin_mask_path: None,
            bg_mask_path: None,
        });
        true_lightness.push(l);
    }
    let manifest = images.join("manifest.csv");
    io::write_manifest(&manifest, &rows)?;

    // 2. skintone correct
    let mut cfg = RunConfig::new(root.join("corrected"));
    cfg.manifest = Some(manifest.clone());
    let s = batch::cmd_correct(&cfg)?;
    println!("correct: {} processed, {} failed", s.processed, s.failures.len());

    // 3. skintone auto-rate on the corrected images
    let mut cfg = RunConfig::new(root.join("auto"));
    cfg.manifest = Some(root.join("corrected").join(CORRECTED_MANIFEST_FILE));
    let s = batch::cmd_auto_rate(&cfg)?;
    println!("auto-rate: {} processed, {} failed", s.processed, s.failures.len());
    let auto_csv = root.join("auto").join(AUTO_RATINGS_FILE);
    let auto = io::read_auto_rate_csv(&auto_csv)?;

    // 4. Three raters who mostly agree with the measured label.
    let t0 = Utc.with_ymd_and_hms(2024, 5, 6, 10, 0, 0).unwrap();
    let ratings_dir = root.join("ratings");
    std::fs::create_dir_all(&ratings_dir)?;
    let mut logs = Vec::new();
    for rater in ["ana", "ben", "chi"] {
        let mut records = Vec::new();
        for (k, row) in auto.iter().enumerate() {
            let base: i64 = row.label_ordinal.parse().context("auto-rated label")?;
            let fst = (base + rng.random_range(-1..=1)).clamp(1, 6) as u8;
            records.push(RatingRecord {
                image_id: row.image_id.clone(),
                rater_id: rater.into(),
                fst,
                tool_variant: ToolVariant::ExemplarCorrected,
                timestamp: t0 + Duration::seconds(k as i64 * 40),
            });
        }
        let path = ratings_dir.join(format!("{rater}.jsonl"));
        io::write_ratings_jsonl(std::fs::File::create(&path)?, &records)?;
        logs.push(path);
    }

    // 5. skintone consensus / agreement / compare / report
    let mut cfg = RunConfig::new(root.join("analysis"));
    cfg.ratings = logs;
    cfg.auto_ratings = Some(auto_csv);
    cfg.manifest = Some(root.join("corrected").join(CORRECTED_MANIFEST_FILE));
    let c = batch::cmd_consensus(&cfg)?;
    println!("consensus: {} images", c.report.results.len());
    for m in batch::cmd_agreement(&cfg)? {
        println!("agreement: {}", m.summary());
    }
    println!("compare: {}", batch::cmd_compare(&cfg)?.summary());
    batch::cmd_report(&cfg)?;

    println!("\nauto ratings ({}):", AUTO_RATINGS_FILE);
    for (row, l) in auto.iter().zip(&true_lightness) {
        println!(
            "  {:<10} true L* {l:5.1}  ITA {:>7}  {}",
            row.image_id, row.ita_degrees, row.label_name
        );
    }
    println!("\noutputs under {}", root.display());
    for dir in ["corrected", "auto", "analysis"] {
        let mut names: Vec<_> = std::fs::read_dir(root.join(dir))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| !n.ends_with(".png"))
            .collect();
        names.sort();
        println!("  {dir}/: {}", names.join(", "));
    }
    Ok(())
}
