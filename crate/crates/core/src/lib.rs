//! Single-pass hierarchical clustering of learner interaction data.
//!
//! The crate covers the whole flow used to compare classic BIRCH against a
//! variant that first ranks activity features with a random walk over their
//! correlation graph and clusters only the highest-ranked ones:
//!
//! * [`dataset`]: records, subsets, learner × activity matrices, synthetic data.
//! * [`cf_tree`]: clustering features and the height-balanced CF-tree.
//! * [`birch`]: tree build, outlier filtering, global agglomeration, assignment.
//! * [`random_walk`]: correlation graph, Markov walks, step-length descent, key paths.
//! * [`metrics`]: pairwise confusion counts and the four scores, plus timing.
//! * [`pipeline`]: baseline vs improved runs and batch comparisons.
//! * [`report`]: text/CSV/SVG renderings of models, comparisons and plots.

pub mod birch;
pub mod cf_tree;
pub mod dataset;
pub mod metrics;
pub mod pipeline;
pub mod random_walk;
pub mod report;

pub use birch::{BirchConfig, ClusterModel, StopRule};
pub use cf_tree::{CFTree, ClusteringFeature, TreeParams};
pub use dataset::{ActivityKind, FeatureMatrix, SubsetKey, SyntheticSpec};
pub use metrics::{PairConfusion, ScoreBundle};
pub use pipeline::{Comparison, RunResult, Variant};
pub use random_walk::{KeyPath, WalkConfig};
