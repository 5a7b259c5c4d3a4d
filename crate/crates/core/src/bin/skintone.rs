use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skintone::batch::{self, CommandError, RunConfig};
use skintone::correction::DEFAULT_FLOOD_TOLERANCE;
use skintone::io;
use skintone::ratings::ToolVariant;
use skintone::service::{ExemplarSet, RatingService, ServiceConfig};
use skintone::skin::DEFAULT_MIN_SKIN_PIXELS;

#[derive(Parser)]
#[command(
    name = "skintone",
    version,
    about = "Skin tone measurement and Fitzpatrick rating analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gray-reference color correction of every manifest image.
    Correct(Common),
    /// Automated ITA skin tone rating of every manifest face crop.
    AutoRate(Common),
    /// Three-rater consensus from rating logs.
    Consensus(Common),
    /// Inter-rater agreement matrices.
    Agreement(Common),
    /// Manual consensus versus automated labels.
    Compare(Common),
    /// Rater distributions and YCbCr histograms.
    Report(Common),
    /// Run the rating web service.
    Serve(Serve),
}

#[derive(Args)]
struct Common {
    /// Image manifest CSV (image_id, face_path, skin_mask_path, bg_mask_path).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// ITA range table JSON; the standard table when omitted.
    #[arg(long)]
    ita_table: Option<PathBuf>,
    /// Per-channel flood-fill tolerance for fallback background masks.
    #[arg(long, default_value_t = DEFAULT_FLOOD_TOLERANCE)]
    tolerance: u8,
    /// Filtered skin pixels below this raise the low_pixel_count flag.
    #[arg(long, default_value_t = DEFAULT_MIN_SKIN_PIXELS)]
    min_skin_pixels: usize,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Rating tool variant to analyze.
    #[arg(long, default_value = "exemplar_corrected")]
    variant: ToolVariant,
    /// Rating log(s), JSON lines. Repeatable.
    #[arg(long)]
    ratings: Vec<PathBuf>,
    /// Automated rating CSV written by auto-rate.
    #[arg(long)]
    auto: Option<PathBuf>,
}

impl From<Common> for RunConfig {
    fn from(c: Common) -> Self {
        RunConfig {
            manifest: c.manifest,
            out: c.out,
            ita_table: c.ita_table,
            tolerance: c.tolerance,
            min_skin_pixels: c.min_skin_pixels,
            threads: c.threads,
            variant: c.variant,
            ratings: c.ratings,
            auto_ratings: c.auto,
        }
    }
}

#[derive(Args)]
struct Serve {
    /// Image manifest CSV of the images to rate.
    #[arg(long)]
    manifest: PathBuf,
    /// Exemplar CSV (label_ordinal, path, source) with one image per skin type.
    #[arg(long)]
    exemplars: PathBuf,
    /// Comma-separated rater ids allowed to rate.
    #[arg(long, value_delimiter = ',', required = true)]
    raters: Vec<String>,
    /// Append-only rating log.
    #[arg(long, default_value = "ratings.jsonl")]
    log: PathBuf,
    /// Built rating UI bundle to serve at /.
    #[arg(long)]
    ui: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[arg(long, default_value_t = DEFAULT_FLOOD_TOLERANCE)]
    tolerance: u8,
}

fn report(result: batch::CommandResult<batch::BatchSummary>) -> ExitCode {
    match result {
        Ok(s) => {
            eprintln!("processed {}, failed {}", s.processed, s.failures.len());
            for f in &s.failures {
                eprintln!("  {}: {} ({})", f.image_id, f.message, f.code);
            }
            if s.is_success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CommandError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn serve(args: Serve) -> ExitCode {
    let setup = || -> skintone::Result<RatingService> {
        let images = io::read_manifest(&args.manifest)?;
        let exemplars = ExemplarSet::from_manifest(&args.exemplars)?;
        let mut cfg = ServiceConfig::new(images, exemplars, args.raters.clone(), args.log.clone());
        cfg.ui_dir = args.ui.clone();
        cfg.tolerance = args.tolerance;
        RatingService::new(cfg)
    };
    let service = match setup() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    match rt.block_on(skintone::service::serve(service, args.bind)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Correct(c) => report(batch::cmd_correct(&c.into())),
        Command::AutoRate(c) => report(batch::cmd_auto_rate(&c.into())),
        Command::Consensus(c) => match batch::cmd_consensus(&c.into()) {
            Ok(s) => {
                eprintln!(
                    "{} image(s) with consensus, {} skipped",
                    s.report.results.len(),
                    s.report.skipped.len()
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Agreement(c) => match batch::cmd_agreement(&c.into()) {
            Ok(ms) => {
                for m in ms {
                    eprintln!("{}", m.summary());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Compare(c) => match batch::cmd_compare(&c.into()) {
            Ok(d) => {
                eprintln!("{}", d.summary());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Report(c) => match batch::cmd_report(&c.into()) {
            Ok(s) => {
                eprintln!("{} rater(s), {} image(s) scanned", s.raters, s.images_scanned);
                if s.failures.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
        Command::Serve(s) => serve(s),
    }
}
