//! Manual Fitzpatrick ratings: the record model, three-rater consensus,
//! pairwise agreement matrices, per-rater distributions and the comparison
//! of consensus labels with automated ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skin::{SkinToneResult, SkinTypeLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolVariant {
    Baseline,
    Exemplar,
    ExemplarCorrected,
}

impl ToolVariant {
    pub const ALL: [ToolVariant; 3] = [
        ToolVariant::Baseline,
        ToolVariant::Exemplar,
        ToolVariant::ExemplarCorrected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolVariant::Baseline => "baseline",
            ToolVariant::Exemplar => "exemplar",
            ToolVariant::ExemplarCorrected => "exemplar_corrected",
        }
    }
}

impl fmt::Display for ToolVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ToolVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown tool variant {s:?} (expected baseline, exemplar or exemplar_corrected)"))
    }
}

/// One Fitzpatrick rating as logged by the rating tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub image_id: String,
    pub rater_id: String,
    pub fst: u8,
    pub tool_variant: ToolVariant,
    pub timestamp: DateTime<Utc>,
}

impl RatingRecord {
    pub fn validate(&self) -> Result<()> {
        validate_fst(self.fst as i64).map(|_| ())
    }
}

pub fn validate_fst(v: i64) -> Result<u8> {
    if (1..=6).contains(&v) {
        Ok(v as u8)
    } else {
        Err(Error::InvalidRating(v))
    }
}

/// Keeps the latest record for each `(image, rater, variant)`; equal
/// timestamps resolve to the record that comes later in `records`. The output
/// is sorted by variant, image and rater.
pub fn latest_ratings(records: &[RatingRecord]) -> Vec<RatingRecord> {
    let mut latest: BTreeMap<(ToolVariant, &str, &str), &RatingRecord> = BTreeMap::new();
    for r in records {
        let key = (r.tool_variant, r.image_id.as_str(), r.rater_id.as_str());
        match latest.get(&key) {
            Some(prev) if prev.timestamp > r.timestamp => {}
            _ => {
                latest.insert(key, r);
            }
        }
    }
    latest.into_values().cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusMode {
    Unanimous,
    Majority,
    Median,
}

impl ConsensusMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ConsensusMode::Unanimous => "unanimous",
            ConsensusMode::Majority => "majority",
            ConsensusMode::Median => "median",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusResult {
    pub image_id: String,
    pub consensus_fst: u8,
    pub mode: ConsensusMode,
}

/// Fuses three ratings: a value given by two or three raters wins, otherwise
/// the middle rating.
pub fn consensus(r1: u8, r2: u8, r3: u8) -> Result<(u8, ConsensusMode)> {
    for r in [r1, r2, r3] {
        validate_fst(r as i64)?;
    }
    Ok(if r1 == r2 && r2 == r3 {
        (r1, ConsensusMode::Unanimous)
    } else if r1 == r2 || r1 == r3 {
        (r1, ConsensusMode::Majority)
    } else if r2 == r3 {
        (r2, ConsensusMode::Majority)
    } else {
        (r1.max(r2).min(r1.min(r2).max(r3)), ConsensusMode::Median)
    })
}

/// An image left out of the consensus because it does not have exactly three
/// raters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedImage {
    pub image_id: String,
    pub rater_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsensusReport {
    /// Sorted by image id.
    pub results: Vec<ConsensusResult>,
    pub skipped: Vec<SkippedImage>,
}

impl ConsensusReport {
    pub fn mode_count(&self, mode: ConsensusMode) -> u64 {
        self.results.iter().filter(|r| r.mode == mode).count() as u64
    }

    /// Unanimous / majority / median split and the skipped images.
    pub fn summary(&self) -> String {
        let n = self.results.len() as u64;
        let mut s = format!("images with consensus: {n}\n");
        for m in [ConsensusMode::Unanimous, ConsensusMode::Majority, ConsensusMode::Median] {
            let c = self.mode_count(m);
            let _ = writeln!(s, "{}: {c} ({:.1}%)", m.as_str(), pct(c, n));
        }
        let _ = writeln!(s, "skipped (not exactly three raters): {}", self.skipped.len());
        for sk in &self.skipped {
            let _ = writeln!(s, "  {} ({} rater(s))", sk.image_id, sk.rater_count);
        }
        s
    }
}

/// Consensus for every image rated under `variant`, after latest-wins
/// de-duplication.
pub fn consensus_by_image(records: &[RatingRecord], variant: ToolVariant) -> Result<ConsensusReport> {
    let mut by_image: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for r in latest_ratings(records)
        .into_iter()
        .filter(|r| r.tool_variant == variant)
    {
        r.validate()?;
        by_image.entry(r.image_id).or_default().push(r.fst);
    }
    let mut report = ConsensusReport::default();
    for (image_id, fsts) in by_image {
        if let [a, b, c] = fsts[..] {
            let (consensus_fst, mode) = consensus(a, b, c)?;
            report.results.push(ConsensusResult {
                image_id,
                consensus_fst,
                mode,
            });
        } else {
            log::warn!(
                "image {image_id}: {} rater(s) under {variant}, consensus needs exactly 3; skipped",
                fsts.len()
            );
            report.skipped.push(SkippedImage {
                image_id,
                rater_count: fsts.len(),
            });
        }
    }
    Ok(report)
}

/// Co-rating counts for two raters: `counts[i][j]` is the number of images
/// rated `i + 1` by A and `j + 1` by B.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub rater_a: String,
    pub rater_b: String,
    pub counts: [[u64; 6]; 6],
}

impl AgreementMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn count_where(&self, pred: impl Fn(usize) -> bool) -> u64 {
        let mut n = 0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if pred(i.abs_diff(j)) {
                    n += c;
                }
            }
        }
        n
    }

    pub fn exact(&self) -> u64 {
        self.count_where(|d| d == 0)
    }

    pub fn within_one(&self) -> u64 {
        self.count_where(|d| d <= 1)
    }

    pub fn beyond_one(&self) -> u64 {
        self.count_where(|d| d > 1)
    }

    pub fn exact_pct(&self) -> f64 {
        pct(self.exact(), self.total())
    }

    pub fn within_one_pct(&self) -> f64 {
        pct(self.within_one(), self.total())
    }

    /// Differ by exactly one level.
    pub fn adjacent_pct(&self) -> f64 {
        pct(self.within_one() - self.exact(), self.total())
    }

    pub fn beyond_one_pct(&self) -> f64 {
        pct(self.beyond_one(), self.total())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = [[0; 6]; 6];
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                counts[j][i] = c;
            }
        }
        Self {
            rater_a: self.rater_b.clone(),
            rater_b: self.rater_a.clone(),
            counts,
        }
    }

    /// Header row then one row per A rating, B ratings across.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\\{}", self.rater_a, self.rater_b);
        for j in 1..=6 {
            let _ = write!(out, ",{j}");
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            let _ = write!(out, "{}", i + 1);
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{} vs {}: n={} exact={:.1}% within-one={:.1}% adjacent={:.1}% beyond-one={:.1}%",
            self.rater_a,
            self.rater_b,
            self.total(),
            self.exact_pct(),
            self.within_one_pct(),
            self.adjacent_pct(),
            self.beyond_one_pct()
        )
    }
}

pub fn pct(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

fn rater_label(records: &[RatingRecord]) -> String {
    let ids: BTreeSet<&str> = records.iter().map(|r| r.rater_id.as_str()).collect();
    ids.into_iter().collect::<Vec<_>>().join("+")
}

/// Agreement between two rating lists over the images both of them rated.
///
/// Each list is de-duplicated latest-wins per `(image, variant)` and the two
/// are joined on `(image, variant)`.
pub fn agreement(ratings_a: &[RatingRecord], ratings_b: &[RatingRecord]) -> Result<AgreementMatrix> {
    let side = |records: &[RatingRecord]| -> Result<BTreeMap<(ToolVariant, String), u8>> {
        let mut latest: BTreeMap<(ToolVariant, String), &RatingRecord> = BTreeMap::new();
        for r in records {
            r.validate()?;
            let key = (r.tool_variant, r.image_id.clone());
            match latest.get(&key) {
                Some(prev) if prev.timestamp > r.timestamp => {}
                _ => {
                    latest.insert(key, r);
                }
            }
        }
        Ok(latest.into_iter().map(|(k, r)| (k, r.fst)).collect())
    };
    let a = side(ratings_a)?;
    let b = side(ratings_b)?;
    let mut counts = [[0u64; 6]; 6];
    let mut shared = 0;
    for (key, &fa) in &a {
        if let Some(&fb) = b.get(key) {
            counts[fa as usize - 1][fb as usize - 1] += 1;
            shared += 1;
        }
    }
    if shared == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(AgreementMatrix {
        rater_a: rater_label(ratings_a),
        rater_b: rater_label(ratings_b),
        counts,
    })
}

/// Agreement matrices for every pair of raters that co-rated at least one
/// image under `variant`, ordered by rater id.
pub fn pairwise_agreement(records: &[RatingRecord], variant: ToolVariant) -> Result<Vec<AgreementMatrix>> {
    let mut by_rater: BTreeMap<&str, Vec<RatingRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.tool_variant == variant) {
        by_rater.entry(r.rater_id.as_str()).or_default().push(r.clone());
    }
    let raters: Vec<_> = by_rater.keys().copied().collect();
    let mut out = Vec::new();
    for (i, a) in raters.iter().enumerate() {
        for b in &raters[i + 1..] {
            match agreement(&by_rater[a], &by_rater[b]) {
                Ok(m) => out.push(m),
                Err(Error::NoOverlap) => log::warn!("raters {a} and {b} share no images under {variant}"),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Per-rater histogram of ratings 1-6, keyed by rater id.
pub fn agreement_distribution(records: &[RatingRecord]) -> Result<BTreeMap<String, [u64; 6]>> {
    let mut out: BTreeMap<String, [u64; 6]> = BTreeMap::new();
    for r in records {
        r.validate()?;
        out.entry(r.rater_id.clone()).or_default()[r.fst as usize - 1] += 1;
    }
    Ok(out)
}

/// Automated outcome for one image; `None` when the pipeline failed on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutoRating {
    pub image_id: String,
    pub label: Option<SkinTypeLabel>,
}

impl From<&SkinToneResult> for AutoRating {
    fn from(r: &SkinToneResult) -> Self {
        Self {
            image_id: r.image_id.clone(),
            label: Some(r.label),
        }
    }
}

/// Histogram of `|consensus - automated|` over `{0, 1, 2, 3+}` plus the
/// images the automated pipeline failed on.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffDistribution {
    pub histogram: [u64; 4],
    pub failures: u64,
}

impl DiffDistribution {
    pub fn rated(&self) -> u64 {
        self.histogram.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.rated() + self.failures
    }

    pub fn exact_pct(&self) -> f64 {
        pct(self.histogram[0], self.rated())
    }

    pub fn within_one_pct(&self) -> f64 {
        pct(self.histogram[0] + self.histogram[1], self.rated())
    }

    pub fn bucket_pct(&self, i: usize) -> f64 {
        pct(self.histogram[i], self.rated())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("difference,count,percent\n");
        for (i, name) in ["0", "1", "2", "3+"].iter().enumerate() {
            let _ = writeln!(out, "{name},{},{:.1}", self.histogram[i], self.bucket_pct(i));
        }
        let _ = writeln!(out, "failure,{},", self.failures);
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "images={} rated={} failures={} exact={:.1}% within-one={:.1}%",
            self.total(),
            self.rated(),
            self.failures,
            self.exact_pct(),
            self.within_one_pct()
        )
    }
}

/// Joins consensus and automated results on image id. Consensus images with
/// no automated result, or a failed one, count as failures; automated results
/// without a consensus are ignored.
pub fn manual_vs_auto(consensus: &[ConsensusResult], auto: &[AutoRating]) -> DiffDistribution {
    let auto: BTreeMap<&str, Option<SkinTypeLabel>> = auto.iter().map(|a| (a.image_id.as_str(), a.label)).collect();
    let mut dist = DiffDistribution::default();
    for c in consensus {
        match auto.get(c.image_id.as_str()).copied().flatten() {
            Some(label) => {
                let d = (c.consensus_fst as usize).abs_diff(label.ordinal() as usize);
                dist.histogram[d.min(3)] += 1;
            }
            None => dist.failures += 1,
        }
    }
    dist
}
