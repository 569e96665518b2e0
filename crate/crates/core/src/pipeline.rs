//! Baseline and key-path-filtered clustering runs, and paired comparison of
//! the two over many matrices.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::birch::{fit_predict, Assignment, BirchConfig, BirchError, ClusterModel};
use crate::dataset::{ActivityKind, FeatureMatrix, SubsetKey};
use crate::metrics::{benchmark, MetricsError, ScoreBundle};
use crate::random_walk::{extract_key_path, project_features, KeyPath, WalkConfig, WalkError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Birch(#[from] BirchError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no matrices to compare")]
    NoInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Baseline,
    Improved,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Improved => "improved",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "improved" => Ok(Variant::Improved),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub id: String,
    pub subset: Option<SubsetKey>,
    pub variant: Variant,
    /// Columns the model was fitted on, in model order.
    pub features: Vec<ActivityKind>,
    pub model: ClusterModel,
    pub assignment: Assignment,
    pub key_path: Option<KeyPath>,
    /// Seconds spent in the clustering (and, for the improved variant, the
    /// walk and projection).
    pub wall_time: f64,
    pub scores: Option<ScoreBundle>,
}

fn scores_for(matrix: &FeatureMatrix, assignment: &Assignment) -> Result<Option<ScoreBundle>, PipelineError> {
    let Some(truth) = matrix.labels() else {
        return Ok(None);
    };
    match ScoreBundle::evaluate(truth, &assignment.labels) {
        Ok(s) => Ok(Some(s)),
        Err(MetricsError::EmptyConfusion) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// BIRCH on every column.
pub fn run_baseline(matrix: &FeatureMatrix, config: &BirchConfig) -> Result<RunResult, PipelineError> {
    let (fitted, wall_time) = benchmark(|| fit_predict(matrix, config));
    let (model, assignment) = fitted?;
    Ok(RunResult {
        id: matrix.id().to_string(),
        subset: matrix.subset(),
        variant: Variant::Baseline,
        features: matrix.feature_names().to_vec(),
        scores: scores_for(matrix, &assignment)?,
        model,
        assignment,
        key_path: None,
        wall_time,
    })
}

/// Key-path extraction, projection onto the path, then BIRCH.
pub fn run_improved(
    matrix: &FeatureMatrix,
    birch_config: &BirchConfig,
    walk_config: &WalkConfig,
    top_fraction: f64,
) -> Result<RunResult, PipelineError> {
    let (fitted, wall_time) = benchmark(|| -> Result<_, PipelineError> {
        let path = extract_key_path(matrix, walk_config, top_fraction)?;
        let projected = project_features(matrix, &path)?;
        let (model, assignment) = fit_predict(&projected, birch_config)?;
        Ok((path, model, assignment))
    });
    let (path, model, assignment) = fitted?;
    Ok(RunResult {
        id: matrix.id().to_string(),
        subset: matrix.subset(),
        variant: Variant::Improved,
        features: path.activities.clone(),
        scores: scores_for(matrix, &assignment)?,
        model,
        assignment,
        key_path: Some(path),
        wall_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareConfig {
    pub birch: BirchConfig,
    pub walk: WalkConfig,
    pub top_fraction: f64,
    /// Worker threads; 0 means one per logical CPU.
    pub workers: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            birch: BirchConfig::default(),
            walk: WalkConfig::default(),
            top_fraction: 0.6,
            workers: 0,
        }
    }
}

/// Both variants on one matrix, or the reason either failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub id: String,
    pub outcome: Result<(RunResult, RunResult), String>,
}

impl ComparisonRow {
    pub fn baseline(&self) -> Option<&RunResult> {
        self.outcome.as_ref().ok().map(|(b, _)| b)
    }

    pub fn improved(&self) -> Option<&RunResult> {
        self.outcome.as_ref().ok().map(|(_, i)| i)
    }

    /// Improved minus baseline, per metric.
    pub fn score_delta(&self) -> Option<ScoreBundle> {
        let (b, i) = self.outcome.as_ref().ok()?;
        let (b, i) = (b.scores?, i.scores?);
        Some(ScoreBundle {
            precise: i.precise - b.precise,
            accuracy: i.accuracy - b.accuracy,
            recall: i.recall - b.recall,
            f_score: i.f_score - b.f_score,
        })
    }

    /// Improved wall time over baseline wall time.
    pub fn time_ratio(&self) -> Option<f64> {
        let (b, i) = self.outcome.as_ref().ok()?;
        (b.wall_time > 0.0).then(|| i.wall_time / b.wall_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn succeeded(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_ok()).count()
    }

    pub fn failed(&self) -> usize {
        self.rows.len() - self.succeeded()
    }
}

fn compare_one(matrix: &FeatureMatrix, config: &CompareConfig) -> ComparisonRow {
    let outcome = run_baseline(matrix, &config.birch)
        .and_then(|b| {
            Ok((
                b,
                run_improved(matrix, &config.birch, &config.walk, config.top_fraction)?,
            ))
        })
        .map_err(|e| e.to_string());
    ComparisonRow {
        id: matrix.id().to_string(),
        outcome,
    }
}

/// Runs both variants on every matrix, in parallel across matrices. Rows
/// keep input order; a failing matrix yields a failed row.
pub fn compare(matrices: &[FeatureMatrix], config: &CompareConfig) -> Result<Comparison, PipelineError> {
    if matrices.is_empty() {
        return Err(PipelineError::NoInput);
    }
    config.birch.validate()?;
    config.walk.validate()?;
    if !(config.top_fraction > 0.0 && config.top_fraction <= 1.0) {
        return Err(PipelineError::InvalidConfig(format!(
            "top fraction {} outside (0, 1]",
            config.top_fraction
        )));
    }
    let rows = if config.workers == 1 {
        matrices.iter().map(|m| compare_one(m, config)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        pool.install(|| matrices.par_iter().map(|m| compare_one(m, config)).collect())
    };
    Ok(Comparison { rows })
}
