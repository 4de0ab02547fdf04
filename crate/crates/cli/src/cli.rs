use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use urban_absa::lcf::LcfMode;

#[derive(Debug, Parser)]
#[command(name = "urban-absa", version, about = "Aspect-based sentiment analysis for geo-located urban reviews")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed for every random choice (initialization, shuffling, dropout, synthetic data).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// File of `key=value` lines applied as flags to the sub-command; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect places and reviews over a query grid.
    Ingest(IngestArgs),
    /// Convert between the APC and ATEPC annotation formats.
    Convert(ConvertArgs),
    /// Train a model and write its checkpoint, history and data split.
    Train(TrainArgs),
    /// Score a checkpoint on an annotated test set.
    Eval(EvalArgs),
    /// Extract aspects and their polarity from reviews.
    Infer(InferArgs),
    /// Aggregate predictions into frequency tables and GeoJSON.
    Analyze(AnalyzeArgs),
    /// Draw bar charts of a frequency table.
    Plot(PlotArgs),
    /// Generate a synthetic annotated corpus or places fixtures.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Read canned responses from this directory instead of the network.
    #[arg(long, value_name = "DIR", conflicts_with = "live")]
    pub fixtures: Option<PathBuf>,
    /// Query the live places service; needs PLACES_API_KEY.
    #[arg(long)]
    pub live: bool,
    #[arg(long, default_value_t = 42.3601, allow_hyphen_values = true)]
    pub origin_lat: f64,
    #[arg(long, default_value_t = -71.0589, allow_hyphen_values = true)]
    pub origin_lon: f64,
    #[arg(long, default_value_t = 10)]
    pub rows: usize,
    #[arg(long, default_value_t = 10)]
    pub cols: usize,
    /// Distance between neighbouring query centers in meters.
    #[arg(long, default_value_t = 1000.0)]
    pub spacing_m: f64,
    /// Search radius of each query in meters.
    #[arg(long, default_value_t = 750.0)]
    pub radius_m: f64,
    #[arg(long, default_value = "park")]
    pub category: String,
    /// Live mode: requests per second.
    #[arg(long, default_value_t = 10.0)]
    pub rate: f64,
    /// Directory for places.jsonl and reviews.jsonl.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Apc,
    Atepc,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum, default_value = "apc")]
    pub from: Format,
    #[arg(long, value_enum, default_value = "atepc")]
    pub to: Format,
    #[arg(long, short, value_name = "FILE")]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

/// SRD threshold: a non-negative integer, or `inf` to disable local focus.
pub fn parse_alpha(s: &str) -> Result<usize, String> {
    match s {
        "inf" | "infinity" | "none" => Ok(usize::MAX),
        _ => s.parse().map_err(|_| format!("expected a non-negative integer or `inf`, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Annotated corpus (APC or ATEPC).
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Corpus format; by default `.atepc` files are ATEPC and anything else APC.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output directory: model.ckpt (+ sidecars), history.json, train.atepc, test.atepc.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2250)]
    pub train_size: usize,
    #[arg(long, default_value_t = 250)]
    pub test_size: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 6)]
    pub epochs: usize,
    #[arg(long, default_value_t = 2e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub d_model: usize,
    #[arg(long, default_value_t = 4)]
    pub n_heads: usize,
    #[arg(long, default_value_t = 2)]
    pub n_layers: usize,
    #[arg(long, default_value_t = 128)]
    pub d_ff: usize,
    #[arg(long, default_value_t = 128)]
    pub max_len: usize,
    #[arg(long, default_value = "3", value_parser = parse_alpha)]
    pub alpha: usize,
    #[arg(long, default_value_t = LcfMode::Cdw)]
    pub lcf_mode: LcfMode,
    #[arg(long, default_value_t = 0.1)]
    pub dropout: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE", required_unless_present = "echo_oracle")]
    pub checkpoint: Option<PathBuf>,
    /// Annotated test set (APC or ATEPC).
    #[arg(long, value_name = "FILE")]
    pub test: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Second checkpoint reported as an extra table row.
    #[arg(long, value_name = "FILE")]
    pub baseline: Option<PathBuf>,
    /// Score a model double that echoes the gold annotation.
    #[arg(long, conflicts_with_all = ["checkpoint", "baseline"])]
    pub echo_oracle: bool,
    /// Also write the report(s) as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// One review per line, or reviews.jsonl; defaults to stdin.
    #[arg(long, short, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Defaults to stdout.
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Output of `infer` run on the reviews file.
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub reviews: PathBuf,
    /// Keep only the k most frequent aspects per polarity in frequency.csv.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Grid cell edge in degrees for cells.geojson.
    #[arg(long, default_value_t = urban_absa::geo::DEFAULT_CELL_DEG)]
    pub cell_size: f64,
    /// Directory for frequency.csv, aspects.geojson and cells.geojson.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_name = "FILE")]
    pub frequency: PathBuf,
    /// Bars per chart.
    #[arg(long, default_value_t = 15)]
    pub top_k: usize,
    /// Directory for one SVG per polarity.
    #[arg(long, short, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// APC corpus of template sentences.
    Corpus,
    /// Nearby and details responses plus a grid config for `ingest`.
    Fixtures,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 2500)]
    pub sentences: usize,
    #[arg(long, default_value_t = 500)]
    pub places: usize,
    /// Corpus file or fixtures directory.
    #[arg(long, short, value_name = "PATH")]
    pub out: PathBuf,
}
