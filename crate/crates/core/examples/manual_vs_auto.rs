//! Manual consensus against automated labels: the histogram of absolute
//! label differences and the exact / within-one consistency.
//!
//!     cargo run --example manual_vs_auto

mod support;

use anyhow::Result;
use skintone::colorspace::{lab_to_rgb, Lab, Rgb8};
use skintone::ratings::{self, AutoRating, ConsensusMode, ConsensusResult};
use skintone::skin::{rate_image, RateConfig};

fn main() -> Result<()> {
    let cfg = RateConfig::default();
    // (L*, b*) of each synthetic face and the consensus the raters reached.
    let faces = [
        (78.0, 8.0, 1),
        (70.0, 12.0, 2),
        (63.0, 16.0, 2),
        (57.0, 18.0, 3),
        (52.0, 20.0, 4),
        (48.0, 22.0, 4),
        (42.0, 20.0, 5),
        (35.0, 18.0, 6),
        (28.0, 14.0, 6),
        (60.0, 20.0, 5),
    ];
    let mut consensus = Vec::new();
    let mut auto = Vec::new();
    for (i, &(l, b, manual)) in faces.iter().enumerate() {
        let id = format!("face{i:02}");
        let crop = support::face_crop(128, lab_to_rgb(Lab::new(l, 12.0, b)), Rgb8::gray(119));
        let label = rate_image(&id, &crop, None, &cfg).ok().map(|r| r.label);
        println!(
            "{id}: manual {manual}, auto {}",
            label.map_or("-".to_string(), |l| l.ordinal().to_string())
        );
        consensus.push(ConsensusResult {
            image_id: id.clone(),
            consensus_fst: manual,
            mode: ConsensusMode::Unanimous,
        });
        auto.push(AutoRating { image_id: id, label });
    }
    // An image the automated path could not rate counts as a failure.
    consensus.push(ConsensusResult {
        image_id: "unreadable".into(),
        consensus_fst: 3,
        mode: ConsensusMode::Majority,
    });
    auto.push(AutoRating {
        image_id: "unreadable".into(),
        label: None,
    });

    let d = ratings::manual_vs_auto(&consensus, &auto);
    println!("\n{}", d.summary());
    print!("{}", d.to_csv());
    Ok(())
}
