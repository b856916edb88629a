use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ifx", version, about = "Build, query and benchmark spatial indexes with learned leaves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build an index, report build time and footprint, optionally snapshot it.
    Build(BuildArgs),
    /// Run point or range queries and print matching ids.
    Query(QueryArgs),
    /// Time one configuration on a workload.
    Bench(BenchArgs),
    /// Time every (family, variant, capacity) combination and report the best capacities.
    Sweep(SweepArgs),
    /// Generate a replayable query workload file.
    GenWorkload(GenWorkloadArgs),
    /// Generate a synthetic dataset.
    GenData(GenDataArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Dataset file (CSV, raw little-endian f32, or IFXD container).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    /// Input format; detected from magic bytes and extension when omitted.
    #[arg(long, value_parser = ["csv", "raw", "container"])]
    pub input_format: Option<String>,
    /// Keep at most this many records.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Draw the `--limit` records uniformly (needs `--seed`) instead of taking a prefix.
    #[arg(long)]
    pub reservoir: bool,
    /// Fail if fewer than `--limit` records are available.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug, Clone)]
pub struct IndexArgs {
    /// rtree, kdtree, quadtree (octree in 3D).
    #[arg(long, default_value = "rtree")]
    pub family: String,
    /// Use interpolation-friendly learned leaves.
    #[arg(long)]
    pub learned: bool,
    #[arg(long, default_value_t = 256)]
    pub leaf_capacity: usize,
    /// R-tree internal node capacity (defaults to the leaf capacity).
    #[arg(long)]
    pub fanout: Option<usize>,
    /// Local search inside learned leaves: binary, linear, exponential.
    #[arg(long, default_value = "binary")]
    pub strategy: String,
    /// Quadtree/octree depth limit.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Build leaves on all cores.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Args, Debug, Clone)]
pub struct WorkloadArgs {
    /// Replay a workload file instead of generating one.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Kind::Point)]
    pub kind: Kind,
    /// Number of generated queries [default: 1000000 point, 10000 range].
    #[arg(long)]
    pub queries: Option<usize>,
    /// Target records per range query.
    #[arg(long, default_value_t = 1000)]
    pub sigma: usize,
}

impl WorkloadArgs {
    pub fn query_count(&self) -> usize {
        self.queries.unwrap_or(default_queries(self.kind))
    }
}

pub fn default_queries(kind: Kind) -> usize {
    match kind {
        Kind::Point => 1_000_000,
        Kind::Range => 10_000,
    }
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    /// Comma-separated thread counts for the throughput runs.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub threads: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Report file; nothing machine-readable is written to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Long-format CSV for plotting.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub index: IndexArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the built index here.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["data", "snapshot"])))]
#[command(group(clap::ArgGroup::new("what").required(true).args(["point", "range", "workload"])))]
pub struct QueryArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Load a saved index instead of building from `--data`.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    #[arg(long, value_parser = ["csv", "raw", "container"])]
    pub input_format: Option<String>,
    #[command(flatten)]
    pub index: IndexArgs,
    /// Point query, e.g. `1.5,2.5`.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    /// Range query as `lo,lo:hi,hi`.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    /// Replay a workload file; one output line per query.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    /// Print the number of matches instead of the ids.
    #[arg(long)]
    pub count_only: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub index: IndexArgs,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Benchmark this saved index instead of building one.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Check results against a linear scan.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[command(flatten)]
    pub report: ReportArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Leaf capacities; defaults to 2,4,...,32768.
    #[arg(long, value_delimiter = ',')]
    pub capacities: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "rtree,kdtree,quadtree")]
    pub families: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "plain,learned")]
    pub variants: Vec<Variant>,
    #[arg(long, default_value = "binary")]
    pub strategy: String,
    #[arg(long)]
    pub fanout: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GenWorkloadArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = Kind::Point)]
    pub kind: Kind,
    /// [default: 1000000 point, 10000 range]
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub sigma: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// uniform, clusters, skewed, osm-like.
    #[arg(long, default_value = "skewed")]
    pub distribution: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Format follows the extension: .csv, .ifxd, anything else is raw f32.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Point,
    Range,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Learned,
}
