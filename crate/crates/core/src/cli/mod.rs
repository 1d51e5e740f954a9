//! Command-line entry point. Every stage reads and writes documented files,
//! so any stage can be swapped for an external tool.

mod commands;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use crate::config::PipelineConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pagezones", version, about = "Layout annotations from marked-up editions, and layout evaluation")]
pub struct Cli {
    /// Pipeline configuration file (TOML); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Random seed for sampling steps.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-page region transcripts from TEI editions, as ndjson.
    Extract(ExtractArgs),
    /// Canonical OCR pages (ndjson) from hOCR or OCR JSON.
    Ingest(IngestArgs),
    /// Align edition pages to OCR pages and assign lines to regions.
    Align(AlignArgs),
    /// Decide whether a scanned book and an edition hold the same text.
    MatchBooks(MatchBooksArgs),
    /// Region geometry from alignments and figure detections.
    Annotate(AnnotateArgs),
    /// Pixel accuracy, mean accuracy, mean IU and frequency-weighted IU.
    EvalPixel(EvalPixelArgs),
    /// Word-level retrieval per region type.
    EvalWord(EvalWordArgs),
    /// Region-level (presence) retrieval per region type.
    EvalRegion(EvalRegionArgs),
    /// Detection AP over IoU 0.50:0.95.
    EvalAp(EvalApArgs),
    /// Self-training page selection.
    #[command(subcommand)]
    SelfTrain(SelfTrainCommand),
    /// Pearson correlation of per-page pixel IU and word-level F1.
    Correlate(CorrelateArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// TEI files or directories of `.xml` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Builtin rule set (`dta`, `tcp`, `wwo`) or rule file.
    #[arg(long)]
    pub rules: Option<String>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OcrFormat {
    Hocr,
    Json,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// hOCR files, OCR ndjson files, or directories of either.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "hocr")]
    pub format: OcrFormat,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Page records from `extract`.
    #[arg(long)]
    pub edition: PathBuf,
    /// Canonical OCR pages from `ingest`.
    #[arg(long)]
    pub ocr: PathBuf,
    /// Alignment parameter file; replaces the config's `[align]` table.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MatchBooksArgs {
    /// Canonical OCR pages of the scanned book.
    #[arg(long)]
    pub scan: PathBuf,
    /// Page records of the edition.
    #[arg(long)]
    pub edition: PathBuf,
    #[arg(long)]
    pub page_threshold: Option<f64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// Alignments from `align`.
    #[arg(long)]
    pub alignments: PathBuf,
    /// Detector candidates: JSON object mapping page image to `[{bbox, score, class}]`.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Hull rectangles instead of line-union outlines.
    #[arg(long)]
    pub rect: bool,
    /// Output directory, one JSON file per page.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Reference annotations: directory, ndjson or single JSON file.
    #[arg(long)]
    pub reference: PathBuf,
    /// Predicted annotations, same forms.
    #[arg(long)]
    pub predicted: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalPixelArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long)]
    pub scale: Option<u32>,
    /// Leave the background class out of all sums and means.
    #[arg(long)]
    pub exclude_background: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalWordArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Canonical OCR pages supplying word boxes.
    #[arg(long)]
    pub ocr: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalRegionArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Required polygon IoU for a predicted instance to count.
    #[arg(long)]
    pub min_iou: Option<f64>,
    /// Predicted instances scoring below this are ignored.
    #[arg(long)]
    pub min_score: Option<f64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalApArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SelfTrainCommand {
    /// Pages whose predictions recover every ground-truth region.
    Select(SelectArgs),
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Ground-truth (or transcription-derived) annotations.
    #[arg(long)]
    pub gt: PathBuf,
    /// Model predictions.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub iou: Option<f64>,
    /// Keep at most this many pages per layout signature.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Allow unmatched predicted regions.
    #[arg(long)]
    pub lenient: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long)]
    pub ocr: PathBuf,
    #[arg(long)]
    pub scale: Option<u32>,
    /// Output directory for CSV and SVG files.
    #[arg(short, long)]
    pub output: PathBuf,
}

fn init_logging() {
    let filter = EnvFilter::try_from_env("PAGEZONES_LOG").unwrap_or_else(|_| EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .json()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

fn load_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Parse `args` (program name first) and run the subcommand. Returns the
/// process exit code: 0 ok, 1 runtime failure, 2 usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging();
    let result = load_config(&cli).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?;
        pool.install(|| commands::dispatch(&cli.command, cfg))
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            tracing::error!(error = format!("{e:#}"), "run failed");
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}
