use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "srctrace",
    version,
    about = "kNN source tracing over precomputed speech embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate manifests and embedding files and print corpus counts.
    Ingest(IngestArgs),
    /// Checkpoint attribution: split, fit, classify, macro F1 per seed.
    Attribute(RunArgs),
    /// Macro F1 over layers and support-set sizes.
    Sweep(SweepArgs),
    /// Out-of-domain detection with an EER-calibrated distance threshold.
    Ood(OodArgs),
    /// Neighbour-class purity of every class.
    AnalyzeNeighbors(NeighborArgs),
    /// Reduce the support set with condensed nearest neighbour.
    Condense(RunArgs),
    /// Collect the reports of a run directory into one summary.
    Report(ReportArgs),
}

/// Options shared by all experiment commands. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// JSON-Lines sample manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Embedding file, or a path pattern containing `{layer}`.
    #[arg(long)]
    pub embeddings: Option<String>,
    /// checkpoint | acoustic_model | vocoder | dataset | speaker | language,
    /// a `+`-joined combination, or relabel:<path>.
    #[arg(long)]
    pub target: Option<String>,
    /// Neighbour count(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Split seed(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Embedding layer to use.
    #[arg(long)]
    pub layer: Option<u32>,
    /// Keep only these datasets, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub datasets: Vec<String>,
    /// Worker threads for batch search; 0 uses all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Frozen split assignment (JSON-Lines) to use instead of generating one.
    #[arg(long)]
    pub protocol: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Layers to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<u32>,
    /// Support settings, comma separated: per-class counts or ratio:<r>.
    #[arg(long, value_delimiter = ',')]
    pub support: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OodArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Checkpoints withheld per dataset.
    #[arg(long)]
    pub per_dataset: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct NeighborArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Also pool classes by this manifest field (e.g. dataset).
    #[arg(long)]
    pub group_by: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Manifest per shard; repeat to ingest several shards.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    /// Embedding file per shard, in the same order as --manifest.
    #[arg(long, required = true)]
    pub embeddings: Vec<PathBuf>,
    #[arg(long, default_value = "checkpoint")]
    pub target: String,
    /// Write the merged manifest and embedding file to this directory.
    #[arg(long)]
    pub merge: Option<PathBuf>,
    /// Write the summary as CSV and text to this directory.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Run directory written by the other commands.
    pub dir: PathBuf,
}
