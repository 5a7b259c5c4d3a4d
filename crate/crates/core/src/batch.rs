//! Batch commands over image manifests and rating logs.
//!
//! Every command writes its outputs into `RunConfig::out` with fixed row
//! ordering and fixed float formatting, so identical inputs give
//! byte-identical files regardless of the worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::colorspace::rgb_to_ycbcr;
use crate::correction::{correct_image, segment_background_fallback, DEFAULT_FLOOD_TOLERANCE};
use crate::error::Error;
use crate::io::{self, AutoRateRow, ManifestRow};
use crate::raster::RgbImage;
use crate::ratings::{self, RatingRecord, ToolVariant};
use crate::skin::{extract_skin_mask_fallback, rate_image, RateConfig, DEFAULT_MIN_SKIN_PIXELS};

pub const FACTORS_FILE: &str = "factors.csv";
pub const CORRECTED_MANIFEST_FILE: &str = "corrected_manifest.csv";
pub const CORRECTED_SUFFIX: &str = ".corrected.png";
pub const AUTO_RATINGS_FILE: &str = "auto_ratings.csv";
pub const CONSENSUS_FILE: &str = "consensus.csv";
pub const CONSENSUS_SUMMARY_FILE: &str = "consensus_summary.txt";
pub const AGREEMENT_SUMMARY_FILE: &str = "agreement_summary.txt";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_IMAGES_FILE: &str = "compare_images.csv";
pub const COMPARE_SUMMARY_FILE: &str = "compare_summary.txt";
pub const RATER_DISTRIBUTION_FILE: &str = "rater_distribution.csv";
pub const YCBCR_HISTOGRAM_FILE: &str = "ycbcr_histograms.csv";

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CommandError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Run(_) => 1,
        }
    }
}

pub type CommandResult<T> = std::result::Result<T, CommandError>;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub ita_table: Option<PathBuf>,
    pub tolerance: u8,
    pub min_skin_pixels: usize,
    /// 0 lets the pool pick.
    pub threads: usize,
    pub variant: ToolVariant,
    pub ratings: Vec<PathBuf>,
    pub auto_ratings: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            manifest: None,
            out: out.into(),
            ita_table: None,
            tolerance: DEFAULT_FLOOD_TOLERANCE,
            min_skin_pixels: DEFAULT_MIN_SKIN_PIXELS,
            threads: 0,
            variant: ToolVariant::ExemplarCorrected,
            ratings: Vec::new(),
            auto_ratings: None,
        }
    }

    fn prepare_out(&self) -> CommandResult<()> {
        fs::create_dir_all(&self.out)
            .map_err(|e| CommandError::Config(format!("cannot create output directory {}: {e}", self.out.display())))
    }

    fn manifest_rows(&self) -> CommandResult<Vec<ManifestRow>> {
        let path = self
            .manifest
            .as_ref()
            .ok_or_else(|| CommandError::Config("--manifest is required".into()))?;
        if !path.is_file() {
            return Err(CommandError::Config(format!(
                "manifest {} does not exist",
                path.display()
            )));
        }
        let rows = io::read_manifest(path).map_err(|e| CommandError::Config(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for r in &rows {
            if !seen.insert(r.image_id.as_str()) {
                return Err(CommandError::Config(format!(
                    "duplicate image_id {:?} in manifest",
                    r.image_id
                )));
            }
        }
        Ok(rows)
    }

    fn rate_config(&self) -> CommandResult<RateConfig> {
        let table = match &self.ita_table {
            Some(p) => io::load_ita_table(p).map_err(|e| CommandError::Config(e.to_string()))?,
            None => Default::default(),
        };
        Ok(RateConfig {
            table,
            min_skin_pixels: self.min_skin_pixels,
            ..RateConfig::default()
        })
    }

    fn pool(&self) -> CommandResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| CommandError::Config(format!("thread pool: {e}")))
    }

    fn load_ratings(&self) -> CommandResult<Vec<Vec<RatingRecord>>> {
        if self.ratings.is_empty() {
            return Err(CommandError::Config("at least one --ratings file is required".into()));
        }
        let mut out = Vec::new();
        for p in &self.ratings {
            if !p.is_file() {
                return Err(CommandError::Config(format!(
                    "ratings file {} does not exist",
                    p.display()
                )));
            }
            out.push(io::read_ratings_jsonl(p)?);
        }
        Ok(out)
    }
}

/// Per-row failure in a batch command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowFailure {
    pub image_id: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchSummary {
    pub processed: usize,
    pub failures: Vec<RowFailure>,
}

impl BatchSummary {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

fn check_image_id(id: &str) -> std::result::Result<(), Error> {
    if id.contains(['/', '\\']) || id == "." || id == ".." {
        return Err(Error::Parse {
            path: PathBuf::from("<manifest>"),
            line: 0,
            message: format!("image_id {id:?} cannot be used as a file name"),
        });
    }
    Ok(())
}

fn failure(image_id: &str, e: &Error) -> RowFailure {
    log::error!("{image_id}: {e}");
    RowFailure {
        image_id: image_id.to_owned(),
        code: e.code().to_owned(),
        message: e.to_string(),
    }
}

fn write_file(path: &Path, contents: &str) -> CommandResult<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

struct Corrected {
    row: ManifestRow,
    factors_line: String,
}

fn correct_row(row: &ManifestRow, cfg: &RunConfig) -> std::result::Result<Corrected, Error> {
    check_image_id(&row.image_id)?;
    let img = io::load_rgb(&row.face_path)?;
    let bg = match &row.bg_mask_path {
        Some(p) => io::load_mask_for(p, &img)?,
        None => segment_background_fallback(&img, cfg.tolerance)?,
    };
    let c = correct_image(&img, &bg)?;
    let name = format!("{}{CORRECTED_SUFFIX}", row.image_id);
    io::save_png(&cfg.out.join(&name), &c.image)?;
    let f = c.factors;
    Ok(Corrected {
        row: ManifestRow {
            image_id: row.image_id.clone(),
            face_path: PathBuf::from(name),
            skin_mask_path: row.skin_mask_path.as_deref().map(absolute),
            bg_mask_path: row.bg_mask_path.as_deref().map(absolute),
        },
        factors_line: format!(
            "{},{:.6},{:.6},{:.6},{}",
            row.image_id, f.r_const, f.g_const, f.b_const, c.background_pixels
        ),
    })
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Gray-reference correction of every manifest image.
///
/// Writes `<image_id>.corrected.png`, `factors.csv` and a
/// `corrected_manifest.csv` that points at the corrected images (ready for
/// [`cmd_auto_rate`]).
pub fn cmd_correct(cfg: &RunConfig) -> CommandResult<BatchSummary> {
    let rows = cfg.manifest_rows()?;
    cfg.prepare_out()?;
    let pool = cfg.pool()?;
    let results: Vec<_> = pool.install(|| rows.par_iter().map(|r| (r, correct_row(r, cfg))).collect());

    let mut summary = BatchSummary::default();
    let mut ok = Vec::new();
    for (row, res) in results {
        match res {
            Ok(c) => ok.push(c),
            Err(e) => summary.failures.push(failure(&row.image_id, &e)),
        }
    }
    ok.sort_by(|a, b| a.row.image_id.cmp(&b.row.image_id));
    summary.processed = ok.len();

    let mut factors = String::from("image_id,r_const,g_const,b_const,bg_pixel_count\n");
    for c in &ok {
        factors.push_str(&c.factors_line);
        factors.push('\n');
    }
    write_file(&cfg.out.join(FACTORS_FILE), &factors)?;
    let manifest: Vec<_> = ok.into_iter().map(|c| c.row).collect();
    io::write_manifest(&cfg.out.join(CORRECTED_MANIFEST_FILE), &manifest)?;
    Ok(summary)
}

fn auto_rate_row(row: &ManifestRow, rate: &RateConfig) -> std::result::Result<AutoRateRow, Error> {
    let face = io::load_rgb(&row.face_path)?;
    let mask = row
        .skin_mask_path
        .as_ref()
        .map(|p| io::load_mask_for(p, &face))
        .transpose()?;
    let result = rate_image(&row.image_id, &face, mask.as_ref(), rate)?;
    Ok(AutoRateRow::from_result(&result))
}

/// Automated rating of every manifest face crop into `auto_ratings.csv`,
/// sorted by image id. Failed images keep a row with the failure kind in
/// the `status` column.
pub fn cmd_auto_rate(cfg: &RunConfig) -> CommandResult<BatchSummary> {
    let rows = cfg.manifest_rows()?;
    let rate = cfg.rate_config()?;
    cfg.prepare_out()?;
    let pool = cfg.pool()?;
    let results: Vec<_> = pool.install(|| rows.par_iter().map(|r| (r, auto_rate_row(r, &rate))).collect());

    let mut summary = BatchSummary::default();
    let mut out = Vec::with_capacity(results.len());
    for (row, res) in results {
        match res {
            Ok(r) => {
                summary.processed += 1;
                out.push(r);
            }
            Err(e) => {
                let f = failure(&row.image_id, &e);
                out.push(AutoRateRow::failure(&row.image_id, &f.code));
                summary.failures.push(f);
            }
        }
    }
    out.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    io::write_auto_rate_csv(&cfg.out.join(AUTO_RATINGS_FILE), &out)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusSummary {
    pub report: ratings::ConsensusReport,
}

fn consensus_csv(report: &ratings::ConsensusReport) -> String {
    let mut s = String::from("image_id,consensus_fst,mode\n");
    for r in &report.results {
        let _ = writeln!(s, "{},{},{}", r.image_id, r.consensus_fst, r.mode.as_str());
    }
    s
}

fn consensus_summary_text(report: &ratings::ConsensusReport, variant: ToolVariant) -> String {
    format!("variant: {variant}\n{}", report.summary())
}

/// Three-rater consensus for `cfg.variant` over all `--ratings` files.
pub fn cmd_consensus(cfg: &RunConfig) -> CommandResult<ConsensusSummary> {
    let records: Vec<_> = cfg.load_ratings()?.concat();
    cfg.prepare_out()?;
    let report = ratings::consensus_by_image(&records, cfg.variant)?;
    write_file(&cfg.out.join(CONSENSUS_FILE), &consensus_csv(&report))?;
    write_file(
        &cfg.out.join(CONSENSUS_SUMMARY_FILE),
        &consensus_summary_text(&report, cfg.variant),
    )?;
    Ok(ConsensusSummary { report })
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Agreement matrices for `cfg.variant`.
///
/// With exactly two `--ratings` files each file is one side of a single
/// comparison; otherwise the files are merged and every pair of rater ids is
/// compared. Writes one `agreement_<a>_<b>.csv` per pair and a text summary.
pub fn cmd_agreement(cfg: &RunConfig) -> CommandResult<Vec<ratings::AgreementMatrix>> {
    let sets = cfg.load_ratings()?;
    cfg.prepare_out()?;
    let only = |v: &[RatingRecord]| -> Vec<RatingRecord> {
        v.iter().filter(|r| r.tool_variant == cfg.variant).cloned().collect()
    };
    let matrices = if let [a, b] = &sets[..] {
        vec![ratings::agreement(&only(a), &only(b))?]
    } else {
        ratings::pairwise_agreement(&sets.concat(), cfg.variant)?
    };
    let mut summary = format!("variant: {}\n", cfg.variant);
    for m in &matrices {
        let name = format!("agreement_{}_{}.csv", file_safe(&m.rater_a), file_safe(&m.rater_b));
        write_file(&cfg.out.join(name), &m.to_csv())?;
        summary.push_str(&m.summary());
        summary.push('\n');
    }
    write_file(&cfg.out.join(AGREEMENT_SUMMARY_FILE), &summary)?;
    Ok(matrices)
}

/// Manual consensus versus automated labels (`--auto` CSV from
/// [`cmd_auto_rate`]).
pub fn cmd_compare(cfg: &RunConfig) -> CommandResult<ratings::DiffDistribution> {
    let records: Vec<_> = cfg.load_ratings()?.concat();
    let auto_path = cfg
        .auto_ratings
        .as_ref()
        .ok_or_else(|| CommandError::Config("--auto is required".into()))?;
    if !auto_path.is_file() {
        return Err(CommandError::Config(format!("{} does not exist", auto_path.display())));
    }
    let auto: Vec<_> = io::read_auto_rate_csv(auto_path)?
        .iter()
        .map(AutoRateRow::to_auto_rating)
        .collect();
    cfg.prepare_out()?;
    let report = ratings::consensus_by_image(&records, cfg.variant)?;
    let dist = ratings::manual_vs_auto(&report.results, &auto);

    let by_id: BTreeMap<&str, _> = auto.iter().map(|a| (a.image_id.as_str(), a.label)).collect();
    let mut per_image = String::from("image_id,consensus_fst,auto_ordinal,difference\n");
    for c in &report.results {
        match by_id.get(c.image_id.as_str()).copied().flatten() {
            Some(l) => {
                let d = (c.consensus_fst as i32 - l.ordinal() as i32).abs();
                let _ = writeln!(per_image, "{},{},{},{d}", c.image_id, c.consensus_fst, l.ordinal());
            }
            None => {
                let _ = writeln!(per_image, "{},{},,failure", c.image_id, c.consensus_fst);
            }
        }
    }
    write_file(&cfg.out.join(COMPARE_FILE), &dist.to_csv())?;
    write_file(&cfg.out.join(COMPARE_IMAGES_FILE), &per_image)?;
    write_file(
        &cfg.out.join(COMPARE_SUMMARY_FILE),
        &format!("variant: {}\n{}\n", cfg.variant, dist.summary()),
    )?;
    Ok(dist)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportSummary {
    pub raters: usize,
    pub images_scanned: usize,
    pub failures: Vec<RowFailure>,
}

/// Per-rater rating histograms for `cfg.variant`, plus (with `--manifest`)
/// Y/Cb/Cr histograms of the face-skin pixels for plotting.
pub fn cmd_report(cfg: &RunConfig) -> CommandResult<ReportSummary> {
    let mut summary = ReportSummary::default();
    let have_ratings = !cfg.ratings.is_empty();
    if !have_ratings && cfg.manifest.is_none() {
        return Err(CommandError::Config("report needs --ratings and/or --manifest".into()));
    }
    let rows = match cfg.manifest {
        Some(_) => Some(cfg.manifest_rows()?),
        None => None,
    };
    let records = if have_ratings {
        cfg.load_ratings()?.concat()
    } else {
        Vec::new()
    };
    cfg.prepare_out()?;

    if have_ratings {
        let latest: Vec<_> = ratings::latest_ratings(&records)
            .into_iter()
            .filter(|r| r.tool_variant == cfg.variant)
            .collect();
        let dist = ratings::agreement_distribution(&latest)?;
        let mut s = String::from("rater_id,fst_1,fst_2,fst_3,fst_4,fst_5,fst_6,total\n");
        for (rater, h) in &dist {
            let _ = write!(s, "{rater}");
            for c in h {
                let _ = write!(s, ",{c}");
            }
            let _ = writeln!(s, ",{}", h.iter().sum::<u64>());
        }
        write_file(&cfg.out.join(RATER_DISTRIBUTION_FILE), &s)?;
        summary.raters = dist.len();
    }

    if let Some(rows) = rows {
        let rate = cfg.rate_config()?;
        let pool = cfg.pool()?;
        let results: Vec<_> = pool.install(|| {
            rows.par_iter()
                .map(|row| (row, channel_histograms(row, &rate)))
                .collect()
        });
        let mut total = [[0u64; 256]; 3];
        for (row, res) in results {
            match res {
                Ok(h) => {
                    summary.images_scanned += 1;
                    for (t, h) in total.iter_mut().zip(h.iter()) {
                        for (a, b) in t.iter_mut().zip(h) {
                            *a += b;
                        }
                    }
                }
                Err(e) => summary.failures.push(failure(&row.image_id, &e)),
            }
        }
        let mut s = String::from("value,y,cb,cr\n");
        let [y, cb, cr] = &total;
        for (v, ((y, cb), cr)) in y.iter().zip(cb).zip(cr).enumerate() {
            let _ = writeln!(s, "{v},{y},{cb},{cr}");
        }
        write_file(&cfg.out.join(YCBCR_HISTOGRAM_FILE), &s)?;
    }
    Ok(summary)
}

/// Histograms of rounded Y, Cb and Cr over the face-skin mask, before the
/// chroma filter.
fn channel_histograms(row: &ManifestRow, rate: &RateConfig) -> std::result::Result<Box<[[u64; 256]; 3]>, Error> {
    let face: RgbImage = io::load_rgb(&row.face_path)?;
    let mask = match &row.skin_mask_path {
        Some(p) => io::load_mask_for(p, &face)?,
        None => extract_skin_mask_fallback(&face, &rate.geometry),
    };
    let mut h = Box::new([[0u64; 256]; 3]);
    for (p, &keep) in face.pixels().iter().zip(mask.bits()) {
        if keep {
            let c = rgb_to_ycbcr(*p);
            for (i, v) in [c.y, c.cb, c.cr].into_iter().enumerate() {
                h[i][v.round() as usize] += 1;
            }
        }
    }
    Ok(h)
}
