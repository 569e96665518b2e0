use std::path::PathBuf;

use birchwalk::birch::{BirchConfig, StopRule};
use birchwalk::cf_tree::TreeParams;
use birchwalk::random_walk::WalkConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "birchwalk",
    version,
    about = "BIRCH clustering with random-walk feature filtering",
    args_override_self = true
)]
pub struct Cli {
    /// Flat `key = value` file; keys are long flag names without dashes.
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic labelled matrices as CSV.
    Generate(GenerateArgs),
    /// Extract the key path of a matrix.
    Walk(WalkArgs),
    /// Cluster one matrix.
    Cluster(ClusterArgs),
    /// Run both variants over many matrices and report the comparison.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_name = "U64", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Number of ground-truth clusters.
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    #[arg(long, default_value_t = 8)]
    pub informative: usize,
    #[arg(long, default_value_t = 8)]
    pub distractors: usize,
    #[arg(long, value_name = "N", default_value_t = 500)]
    pub points_per_cluster: usize,
    /// Per-cluster noise variance.
    #[arg(long, default_value_t = 0.35, allow_negative_numbers = true)]
    pub variance: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub outlier_fraction: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub span: f64,
    /// Number of matrices, seeded consecutively from `--seed`.
    #[arg(long, default_value_t = 1)]
    pub subsets: usize,
    /// Write the 22 course/period subsets with their real feature and row
    /// counts instead.
    #[arg(long = "paper-shape")]
    pub course_preset: bool,
}

#[derive(Debug, Args)]
pub struct BirchArgs {
    #[arg(long, value_name = "F", default_value_t = 0.5, allow_negative_numbers = true)]
    pub threshold_t: f64,
    #[arg(long, value_name = "N", default_value_t = 8)]
    pub branching_b: usize,
    #[arg(long, value_name = "N", default_value_t = 8)]
    pub leaf_l: usize,
    /// Leaf entries with fewer points are treated as outliers.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub min_points: u64,
    /// Merge down to this many clusters (default 4 when no rule is given).
    #[arg(long, value_name = "K", conflicts_with = "merge_distance")]
    pub clusters: Option<usize>,
    /// Merge while the closest centroids are at most this far apart.
    #[arg(long, value_name = "F", allow_negative_numbers = true)]
    pub merge_distance: Option<f64>,
}

impl BirchArgs {
    pub fn config(&self) -> BirchConfig {
        let stop = match (self.clusters, self.merge_distance) {
            (_, Some(d)) => StopRule::MergeDistance(d),
            (k, None) => StopRule::TargetClusters(k.unwrap_or(4)),
        };
        BirchConfig {
            tree: TreeParams {
                threshold: self.threshold_t,
                branching: self.branching_b,
                leaf_capacity: self.leaf_l,
                ..TreeParams::new(1)
            },
            outlier_min_points: self.min_points,
            stop,
        }
    }
}

#[derive(Debug, Args)]
pub struct WalkFlags {
    #[arg(long, value_name = "F", default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, value_name = "F", default_value_t = 1e-4, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub tries: usize,
    /// Walk length; defaults to ten steps per activity.
    #[arg(long, value_name = "N")]
    pub walk_steps: Option<usize>,
    #[arg(long, value_name = "F", default_value_t = 0.6, allow_negative_numbers = true)]
    pub top_fraction: f64,
}

impl WalkFlags {
    pub fn config(&self, seed: u64) -> WalkConfig {
        WalkConfig {
            lambda0: self.lambda,
            epsilon: self.epsilon,
            max_tries: self.tries,
            seed,
            steps: self.walk_steps,
        }
    }
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    /// Matrix CSV (`learner_id,<activities>[,label]`).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub walk: WalkFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantChoice {
    Baseline,
    Improved,
    Both,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantChoice::Baseline)]
    pub variant: VariantChoice,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub birch: BirchArgs,
    #[command(flatten)]
    pub walk: WalkFlags,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory of matrix CSVs.
    #[arg(long, value_name = "DIR", required_unless_present = "course_preset")]
    pub input: Option<PathBuf>,
    /// Compare on generated subsets shaped like the 22 course/period cells.
    #[arg(long = "paper-shape", conflicts_with = "input")]
    pub course_preset: bool,
    /// Worker threads; 0 uses every logical CPU.
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub birch: BirchArgs,
    #[command(flatten)]
    pub walk: WalkFlags,
}
