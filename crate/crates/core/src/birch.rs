//! BIRCH over a [`FeatureMatrix`]: one pass to build the CF-tree, removal of
//! sparsely populated leaf entries, agglomeration of the remaining entries
//! into final clusters, then nearest-centroid labelling of every row.

use crate::cf_tree::{CFEntry, CFTree, CfError, ClusteringFeature, TreeParams};
use crate::dataset::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BirchError {
    #[error(transparent)]
    Tree(#[from] CfError),
    #[error("input matrix has no rows")]
    EmptyInput,
    #[error("no entries to cluster")]
    NoEntries,
    #[error("every leaf entry was filtered as an outlier")]
    DegenerateClustering,
    #[error("matrix has {found} features but the model has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// How the global phase decides when to stop merging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Merge while the closest pair of centroids is at most this far apart.
    MergeDistance(f64),
    /// Merge until this many clusters remain.
    TargetClusters(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirchConfig {
    /// Tree thresholds. `dimension` is taken from the matrix at build time.
    pub tree: TreeParams,
    /// Leaf entries holding fewer points than this are set aside as outliers.
    pub outlier_min_points: u64,
    pub stop: StopRule,
}

impl Default for BirchConfig {
    fn default() -> Self {
        Self {
            tree: TreeParams::new(1),
            outlier_min_points: 1,
            stop: StopRule::MergeDistance(0.5),
        }
    }
}

impl BirchConfig {
    pub fn validate(&self) -> Result<(), BirchError> {
        self.tree.validate()?;
        if self.outlier_min_points < 1 {
            return Err(BirchError::InvalidConfig(
                "outlier_min_points must be at least 1".into(),
            ));
        }
        match self.stop {
            StopRule::MergeDistance(d) if !(d.is_finite() && d > 0.0) => Err(BirchError::InvalidConfig(format!(
                "merge distance {d} must be positive"
            ))),
            StopRule::TargetClusters(0) => Err(BirchError::InvalidConfig(
                "target cluster count must be positive".into(),
            )),
            _ => Ok(()),
        }
    }

    fn params_for(&self, dimension: usize) -> TreeParams {
        TreeParams { dimension, ..self.tree }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    pub cluster_cfs: Vec<ClusteringFeature>,
    pub outlier_cfs: Vec<ClusteringFeature>,
    pub config: BirchConfig,
    /// Centroid distance of every merge performed, in order.
    pub merge_distances: Vec<f64>,
}

impl ClusterModel {
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn dimension(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Cluster index per row.
    pub labels: Vec<i64>,
    /// Rows that sat in leaf entries filtered as outliers. Populated by
    /// [`fit_predict`] only.
    pub outlier_rows: Vec<usize>,
}

/// Inserts every row, in order, into a member-tracking CF-tree.
pub fn build_tree(matrix: &FeatureMatrix, config: &BirchConfig) -> Result<CFTree, BirchError> {
    config.validate()?;
    if matrix.n_rows() == 0 {
        return Err(BirchError::EmptyInput);
    }
    let mut tree = CFTree::with_member_tracking(config.params_for(matrix.n_features()))?;
    for row in matrix.rows() {
        tree.insert_point(row)?;
    }
    Ok(tree)
}

fn split_entries<'a>(tree: &'a CFTree, config: &BirchConfig) -> (Vec<&'a CFEntry>, Vec<&'a CFEntry>) {
    tree.leaf_entry_refs()
        .into_iter()
        .partition(|e| e.cf.n() >= config.outlier_min_points)
}

/// Splits leaf entries (chain order kept) into kept ones and those with fewer
/// than `outlier_min_points` points.
pub fn filter_outliers(tree: &CFTree, config: &BirchConfig) -> (Vec<ClusteringFeature>, Vec<ClusteringFeature>) {
    let (kept, outliers) = split_entries(tree, config);
    (
        kept.into_iter().map(|e| e.cf.clone()).collect(),
        outliers.into_iter().map(|e| e.cf.clone()).collect(),
    )
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Centroid agglomeration over CF entries.
///
/// Repeatedly merges the pair with the closest centroids (ties: smallest
/// index pair) until the stop rule fires. A merged cluster is the CF sum, so
/// its centroid is the size-weighted mean.
pub fn global_cluster(entries: &[ClusteringFeature], config: &BirchConfig) -> Result<ClusterModel, BirchError> {
    config.validate()?;
    if entries.is_empty() {
        return Err(BirchError::NoEntries);
    }
    let dim = entries[0].dim();
    if let Some(bad) = entries.iter().find(|e| e.dim() != dim) {
        return Err(BirchError::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    let m = entries.len();
    let mut clusters: Vec<Option<ClusteringFeature>> = entries.iter().cloned().map(Some).collect();
    let mut centroids: Vec<Vec<f64>> = entries.iter().map(|e| e.centroid()).collect::<Result<_, _>>()?;
    let mut alive = m;

    // nearest[a] = closest live b > a as (squared distance, b)
    let none = (f64::INFINITY, usize::MAX);
    let nearest_of = |a: usize, clusters: &[Option<ClusteringFeature>], centroids: &[Vec<f64>]| {
        let mut best = none;
        for b in a + 1..m {
            if clusters[b].is_some() {
                let d = sq_dist(&centroids[a], &centroids[b]);
                if d < best.0 {
                    best = (d, b);
                }
            }
        }
        best
    };
    let mut nearest: Vec<(f64, usize)> = (0..m).map(|a| nearest_of(a, &clusters, &centroids)).collect();

    let mut merge_distances = Vec::new();
    loop {
        if alive <= 1 {
            break;
        }
        if let StopRule::TargetClusters(k) = config.stop {
            if alive <= k {
                break;
            }
        }
        let mut pick: Option<(f64, usize, usize)> = None;
        for a in 0..m {
            if clusters[a].is_some() && nearest[a].1 != usize::MAX && pick.is_none_or(|(d, _, _)| nearest[a].0 < d) {
                pick = Some((nearest[a].0, a, nearest[a].1));
            }
        }
        let Some((d2, a, b)) = pick else { break };
        let dist = d2.sqrt();
        if let StopRule::MergeDistance(limit) = config.stop {
            if dist > limit {
                break;
            }
        }
        let absorbed = clusters[b].take().expect("live cluster");
        let merged = clusters[a].as_mut().expect("live cluster");
        merged.absorb(&absorbed);
        centroids[a] = merged.centroid()?;
        alive -= 1;
        merge_distances.push(dist);

        nearest[b] = none;
        nearest[a] = nearest_of(a, &clusters, &centroids);
        for c in 0..a {
            if clusters[c].is_none() {
                continue;
            }
            if nearest[c].1 == a || nearest[c].1 == b {
                nearest[c] = nearest_of(c, &clusters, &centroids);
            } else {
                let d = sq_dist(&centroids[c], &centroids[a]);
                if d < nearest[c].0 || (d == nearest[c].0 && a < nearest[c].1) {
                    nearest[c] = (d, a);
                }
            }
        }
        for c in a + 1..b {
            if clusters[c].is_some() && nearest[c].1 == b {
                nearest[c] = nearest_of(c, &clusters, &centroids);
            }
        }
    }

    let mut model = ClusterModel {
        centroids: Vec::with_capacity(alive),
        cluster_cfs: Vec::with_capacity(alive),
        outlier_cfs: Vec::new(),
        config: *config,
        merge_distances,
    };
    for (cf, centroid) in clusters.into_iter().zip(centroids) {
        if let Some(cf) = cf {
            model.cluster_cfs.push(cf);
            model.centroids.push(centroid);
        }
    }
    Ok(model)
}

/// Labels each row with its nearest centroid; ties go to the lower index.
pub fn assign_points(matrix: &FeatureMatrix, model: &ClusterModel) -> Result<Assignment, BirchError> {
    if model.centroids.is_empty() {
        return Err(BirchError::DegenerateClustering);
    }
    if matrix.n_features() != model.dimension() {
        return Err(BirchError::DimensionMismatch {
            expected: model.dimension(),
            found: matrix.n_features(),
        });
    }
    let labels = matrix
        .rows()
        .iter()
        .map(|row| {
            let mut best = (0usize, f64::INFINITY);
            for (k, c) in model.centroids.iter().enumerate() {
                let d = sq_dist(row, c);
                if d < best.1 {
                    best = (k, d);
                }
            }
            best.0 as i64
        })
        .collect();
    Ok(Assignment {
        labels,
        outlier_rows: Vec::new(),
    })
}

/// Build, filter, agglomerate and assign in one call.
pub fn fit_predict(matrix: &FeatureMatrix, config: &BirchConfig) -> Result<(ClusterModel, Assignment), BirchError> {
    let tree = build_tree(matrix, config)?;
    let (kept, outliers) = split_entries(&tree, config);
    if kept.is_empty() {
        return Err(BirchError::DegenerateClustering);
    }
    let kept_cfs: Vec<ClusteringFeature> = kept.iter().map(|e| e.cf.clone()).collect();
    let mut model = global_cluster(&kept_cfs, config)?;
    model.outlier_cfs = outliers.iter().map(|e| e.cf.clone()).collect();
    let mut assignment = assign_points(matrix, &model)?;
    let mut outlier_rows: Vec<usize> = outliers.iter().flat_map(|e| e.members().iter().copied()).collect();
    outlier_rows.sort_unstable();
    assignment.outlier_rows = outlier_rows;
    Ok((model, assignment))
}
