//! `xferkit`: label-free transferability assessment from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use xferkit_core::parallel::{build_pool, threads_from_env};
use xferkit_core::BandRole;

#[derive(Parser, Debug)]
#[command(name = "xferkit", version, about = "Label-free transferability assessment for land-cover models")]
#[command(
    after_help = "Any flag may also be set in a JSON file passed with --config; flags on the command line win.\n\
                        XFERKIT_THREADS caps the number of worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rescale bands to [0, 1] with percentile truncation pooled over all inputs.
    Normalize(NormalizeArgs),
    /// Derive pseudo-labels from NDVI, NDWI and an optional height top-hat.
    Pseudolabel(PseudolabelArgs),
    /// Score a model prediction against pseudo-labels (and ground truth, if given).
    Assess(AssessArgs),
    /// Ground-truth mIoU of a prediction.
    Evaluate(EvaluateArgs),
    /// Rank models on one target domain by a label-free score.
    Rank(RankArgs),
    /// Correlate label-free scores with ground-truth mIoU across reports.
    Correlate(CorrelateArgs),
    /// Cut a raster into overlapping patches.
    Tile(TileArgs),
    /// Merge per-patch probability rasters by overlap voting.
    Merge(MergeArgs),
    /// Random-forest baseline.
    #[command(subcommand)]
    Rf(RfCommand),
    /// Synthetic domains with exact ground truth.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Args, Debug)]
pub struct NormalizeArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Band roles to rescale, comma separated (r,g,b,nir,dsm,agl).
    #[arg(long, value_delimiter = ',', default_value = "r,g,b,nir")]
    pub bands: Vec<BandRole>,
    /// Percent of samples cut from the low end.
    #[arg(long, default_value_t = 2.0)]
    pub lower: f64,
    /// Percent of samples cut from the high end.
    #[arg(long, default_value_t = 2.0)]
    pub upper: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct IndexArgs {
    /// Height input type; taken from the height band's role when omitted.
    #[arg(long, value_enum)]
    pub height_kind: Option<HeightKindArg>,
    /// Side of the square structuring element, pixels (odd).
    #[arg(long, default_value_t = xferkit_core::indices::DEFAULT_SE_SIZE)]
    pub se_size: usize,
    /// Height above which a pixel counts as building, meters.
    #[arg(long, default_value_t = xferkit_core::indices::DEFAULT_MBIH_THRESHOLD)]
    pub mbih_threshold: f64,
    #[arg(long, default_value_t = xferkit_core::indices::DEFAULT_OTSU_BINS)]
    pub otsu_bins: usize,
    /// Fixed NDVI threshold instead of Otsu (requires --ndwi-threshold).
    #[arg(long, requires = "ndwi_threshold")]
    pub ndvi_threshold: Option<f64>,
    /// Fixed NDWI threshold instead of Otsu (requires --ndvi-threshold).
    #[arg(long, requires = "ndvi_threshold")]
    pub ndwi_threshold: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightKindArg {
    Dsm,
    Agl,
}

#[derive(Args, Debug)]
pub struct PseudolabelArgs {
    /// Normalized RGBN raster.
    #[arg(long)]
    pub raster: PathBuf,
    /// Height raster in meters.
    #[arg(long)]
    pub height: Option<PathBuf>,
    #[command(flatten)]
    pub index: IndexArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON summary with the thresholds used.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AssessArgs {
    /// Normalized RGBN rasters, one per scene of the target domain.
    #[arg(long, num_args = 1.., required = true)]
    pub raster: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub height: Vec<PathBuf>,
    /// Label rasters, or 4-band probability rasters.
    #[arg(long, num_args = 1.., required = true)]
    pub pred: Vec<PathBuf>,
    /// Probability rasters for the confidence baseline.
    #[arg(long, num_args = 1..)]
    pub probs: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub gt: Vec<PathBuf>,
    #[arg(long)]
    pub model_id: String,
    #[arg(long)]
    pub domain_id: String,
    #[command(flatten)]
    pub index: IndexArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreArg {
    IndexMiou,
    Confidence,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScoreArg::IndexMiou)]
    pub by: ScoreArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the statistics as canonical JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TileArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub patch: usize,
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct MergeArgs {
    /// Directory of `tile_x<X>_y<Y>.xras` probability rasters.
    #[arg(long)]
    pub patches: PathBuf,
    /// Tiling plan written by `tile`; defaults to `tiles.json` in the patch directory.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Merged label raster.
    #[arg(long)]
    pub out: PathBuf,
    /// Merged probability raster.
    #[arg(long)]
    pub probs_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum RfCommand {
    /// Train a forest on RGBN rasters (plus optional normalized height) and label maps.
    Train(RfTrainArgs),
    /// Predict class probabilities for one raster.
    Predict(RfPredictArgs),
    /// Write a forest as JSON.
    Dump(RfDumpArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GlcmArgs {
    #[arg(long, default_value_t = 13)]
    pub glcm_window: usize,
    #[arg(long, default_value_t = 32)]
    pub glcm_levels: usize,
}

#[derive(Args, Debug)]
pub struct RfTrainArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub raster: Vec<PathBuf>,
    /// One normalized height raster per input raster.
    #[arg(long, num_args = 1..)]
    pub height: Vec<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    pub labels: Vec<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub n_trees: usize,
    #[arg(long, default_value_t = 20)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 1000)]
    pub min_samples_leaf: usize,
    #[arg(long, default_value_t = 4000)]
    pub min_samples_split: usize,
    #[arg(long, default_value_t = 4_000_000)]
    pub n_samples: usize,
    #[arg(long)]
    pub features_per_split: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw the same number of samples from every class.
    #[arg(long)]
    pub stratified: bool,
    #[command(flatten)]
    pub glcm: GlcmArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the forest as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RfPredictArgs {
    #[arg(long)]
    pub forest: PathBuf,
    #[arg(long)]
    pub raster: PathBuf,
    #[arg(long)]
    pub height: Option<PathBuf>,
    #[command(flatten)]
    pub glcm: GlcmArgs,
    /// Probability raster.
    #[arg(long)]
    pub out: PathBuf,
    /// Argmax label raster.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RfDumpArgs {
    #[arg(long)]
    pub forest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum SynthCommand {
    /// Write scenes of one synthetic domain.
    Generate(SynthArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetArg {
    Default,
    Mild,
    Strong,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Domain description as JSON; overrides --preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PresetArg::Default)]
    pub preset: PresetArg,
    /// Seed for presets.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub scenes: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<()> {
    let args = config::expand(std::env::args_os().collect())?;
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    let pool = build_pool(threads_from_env()?)?;
    pool.install(|| commands::dispatch(cli.command))
}
