//! Three-rater consensus and pairwise agreement on a simulated rating
//! campaign. Three raters, each with a different bias and noise level, rate
//! the same images.
//!
//!     cargo run --example consensus_agreement

use anyhow::Result;
use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skintone::ratings::{self, RatingRecord, ToolVariant};

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let t0 = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
    let raters = [("r1", 0.0, 0.6), ("r2", 0.4, 0.8), ("r3", -0.3, 1.0)];

    let mut records = Vec::new();
    for i in 0..120 {
        let truth: f64 = rng.random_range(1.0..=6.0);
        for (k, &(rater, bias, noise)) in raters.iter().enumerate() {
            // One rater skips a few images; those are left out of consensus.
            if rater == "r3" && i % 25 == 0 {
                continue;
            }
            let jitter: f64 = rng.random_range(-noise..=noise);
            let fst = (truth + bias + jitter).round().clamp(1.0, 6.0) as u8;
            records.push(RatingRecord {
                image_id: format!("img{i:03}"),
                rater_id: rater.into(),
                fst,
                tool_variant: ToolVariant::ExemplarCorrected,
                timestamp: t0 + Duration::seconds((i * 3 + k) as i64),
            });
        }
    }

    let report = ratings::consensus_by_image(&records, ToolVariant::ExemplarCorrected)?;
    print!("{}", report.summary());

    println!();
    let matrices = ratings::pairwise_agreement(&records, ToolVariant::ExemplarCorrected)?;
    for m in &matrices {
        println!("{}", m.summary());
    }
    let first = &matrices[0];
    println!("\n{} vs {} matrix:\n{}", first.rater_a, first.rater_b, first.to_csv());

    println!("per-rater label distribution:");
    for (rater, counts) in ratings::agreement_distribution(&records)? {
        println!("  {rater}: {counts:?}");
    }
    Ok(())
}
