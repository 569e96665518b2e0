//! Random-walk ranking of activity features.
//!
//! Activities are vertices of a graph whose edge weights are the Pearson
//! correlations of their columns. A walker moves along positive edges in
//! proportion to their weight; the activities it visits most often form the
//! key path that the improved pipeline clusters on. The step-length
//! descent search ([`rw_descent`]) is provided alongside as an alternative
//! selector over a continuous relaxation of the same graph.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ActivityKind, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WalkError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("need at least 2 features, got {0}")]
    TooFewFeatures(usize),
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("objective is not finite at a probed point")]
    NonFiniteObjective,
    #[error("activity `{0}` is not a column of the matrix")]
    UnknownActivity(ActivityKind),
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot parse key path line {line}: `{text}`")]
    Parse { line: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    /// Initial step length of the descent search.
    pub lambda0: f64,
    /// The descent stops once the step length drops below this.
    pub epsilon: f64,
    /// Consecutive failed probes that end a descent round.
    pub max_tries: usize,
    pub seed: u64,
    /// Graph-walk length; `None` means ten steps per vertex.
    pub steps: Option<usize>,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            epsilon: 1e-4,
            max_tries: 100,
            seed: 0,
            steps: None,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        let bad = |m: String| Err(WalkError::InvalidConfig(m));
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return bad(format!("lambda {} must be positive", self.lambda0));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.lambda0) {
            return bad(format!("epsilon {} must lie in (0, lambda)", self.epsilon));
        }
        if self.max_tries == 0 {
            return bad("tries must be at least 1".into());
        }
        if self.steps == Some(0) {
            return bad("walk steps must be at least 1".into());
        }
        Ok(())
    }

    pub fn steps_for(&self, vertices: usize) -> usize {
        self.steps.unwrap_or(10 * vertices)
    }
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, WalkError> {
    if x.len() != y.len() {
        return Err(WalkError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(WalkError::TooFewRows(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Activities as vertices, column correlations as symmetric edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityGraph {
    pub vertices: Vec<ActivityKind>,
    pub weights: Vec<Vec<f64>>,
}

impl ActivityGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

pub fn build_activity_graph(matrix: &FeatureMatrix) -> Result<ActivityGraph, WalkError> {
    if matrix.n_features() < 2 {
        return Err(WalkError::TooFewFeatures(matrix.n_features()));
    }
    if matrix.n_rows() < 2 {
        return Err(WalkError::TooFewRows(matrix.n_rows()));
    }
    let d = matrix.n_features();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| matrix.column(j)).collect();
    let mut weights = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let w = pearson(&columns[i], &columns[j])?;
            weights[i][j] = w;
            weights[j][i] = w;
        }
    }
    Ok(ActivityGraph {
        vertices: matrix.feature_names().to_vec(),
        weights,
    })
}

/// Row-stochastic walk matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub p: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Wraps an explicit matrix, checking it is square and row-stochastic.
    pub fn from_rows(p: Vec<Vec<f64>>) -> Result<Self, WalkError> {
        let n = p.len();
        if n < 2 {
            return Err(WalkError::TooFewFeatures(n));
        }
        for (i, row) in p.iter().enumerate() {
            if row.len() != n {
                return Err(WalkError::LengthMismatch(row.len(), n));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|v| v.is_nan() || *v < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(WalkError::InvalidConfig(format!("row {i} is not a distribution")));
            }
        }
        Ok(Self { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Positive edge weights normalized per row; a row with no positive edge
/// spreads uniformly over the other vertices.
pub fn transition_matrix(graph: &ActivityGraph) -> Result<TransitionMatrix, WalkError> {
    let n = graph.len();
    if n < 2 {
        return Err(WalkError::TooFewFeatures(n));
    }
    let p = graph
        .weights
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let positive: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(j, &w)| if j == i { 0.0 } else { w.max(0.0) })
                .collect();
            let total: f64 = positive.iter().sum();
            if total > 0.0 {
                positive.iter().map(|w| w / total).collect()
            } else {
                let share = 1.0 / (n - 1) as f64;
                (0..n).map(|j| if j == i { 0.0 } else { share }).collect()
            }
        })
        .collect();
    Ok(TransitionMatrix { p })
}

fn sample_row(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = j;
            if u < acc {
                return j;
            }
        }
    }
    last_positive
}

/// Single walker from a uniformly drawn start; returns the share of steps
/// that landed on each vertex.
pub fn graph_walk(tm: &TransitionMatrix, config: &WalkConfig) -> Result<Vec<f64>, WalkError> {
    let n = tm.len();
    if n == 0 {
        return Err(WalkError::TooFewFeatures(0));
    }
    let steps = config.steps_for(n);
    if steps == 0 {
        return Err(WalkError::InvalidConfig("walk steps must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut at = rng.random_range(0..n);
    let mut visits = vec![0u64; n];
    for _ in 0..steps {
        at = sample_row(&tm.p[at], &mut rng);
        visits[at] += 1;
    }
    Ok(visits.into_iter().map(|c| c as f64 / steps as f64).collect())
}

/// Function minimized by [`rw_descent`].
pub trait Objective {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Objective for F {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// `-Σ_{i<j} x_i x_j w_ij` on `x` clipped to the unit box: lowest where the
/// selected activities are mutually correlated.
#[derive(Debug, Clone)]
pub struct CorrelationObjective {
    weights: Vec<Vec<f64>>,
}

impl CorrelationObjective {
    pub fn new(graph: &ActivityGraph) -> Self {
        Self {
            weights: graph.weights.clone(),
        }
    }
}

impl Objective for CorrelationObjective {
    fn evaluate(&self, x: &[f64]) -> f64 {
        let clipped: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let mut total = 0.0;
        for i in 0..clipped.len() {
            for j in i + 1..clipped.len() {
                total += clipped[i] * clipped[j] * self.weights[i][j];
            }
        }
        -total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub rounds: usize,
    pub evaluations: usize,
    /// Objective value after every accepted step.
    pub accepted: Vec<f64>,
    pub final_lambda: f64,
}

/// Random-direction descent with a halving step length.
///
/// Each probe moves `lambda` along a uniformly drawn direction and is kept
/// only if it lowers `f`. `max_tries` consecutive failures end a round and
/// halve `lambda`; the search ends once `lambda < epsilon`.
pub fn rw_descent(f: &impl Objective, x0: &[f64], config: &WalkConfig) -> Result<DescentOutcome, WalkError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x = x0.to_vec();
    let mut fx = f.evaluate(&x);
    if !fx.is_finite() {
        return Err(WalkError::NonFiniteObjective);
    }
    let mut lambda = config.lambda0;
    let mut rounds = 0;
    let mut evaluations = 1;
    let mut accepted = Vec::new();
    let mut direction = vec![0.0; x.len()];
    let mut candidate = vec![0.0; x.len()];
    loop {
        rounds += 1;
        let mut failures = 0;
        while failures < config.max_tries {
            let norm = loop {
                for u in direction.iter_mut() {
                    *u = rng.random_range(-1.0..1.0);
                }
                let norm = direction.iter().map(|u| u * u).sum::<f64>().sqrt();
                if norm > 0.0 || direction.is_empty() {
                    break norm;
                }
            };
            for ((c, xi), u) in candidate.iter_mut().zip(&x).zip(&direction) {
                *c = xi + lambda * u / norm;
            }
            let fc = f.evaluate(&candidate);
            evaluations += 1;
            if !fc.is_finite() {
                return Err(WalkError::NonFiniteObjective);
            }
            if fc < fx {
                x.copy_from_slice(&candidate);
                fx = fc;
                accepted.push(fc);
                failures = 0;
            } else {
                failures += 1;
            }
        }
        lambda /= 2.0;
        if lambda < config.epsilon {
            break;
        }
    }
    Ok(DescentOutcome {
        x_best: x,
        f_best: fx,
        rounds,
        evaluations,
        accepted,
        final_lambda: lambda,
    })
}

/// Activities ranked by descending score.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPath {
    pub activities: Vec<ActivityKind>,
    pub scores: Vec<f64>,
}

impl KeyPath {
    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    /// One `<rank>,<activity>,<score>` line per activity, ranks from 1.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (rank, (a, s)) in self.activities.iter().zip(&self.scores).enumerate() {
            let _ = writeln!(out, "{},{},{}", rank + 1, a, s);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, WalkError> {
        let mut path = KeyPath {
            activities: Vec::new(),
            scores: Vec::new(),
        };
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || WalkError::Parse {
                line: i + 1,
                text: line.to_string(),
            };
            let mut parts = line.split(',');
            let (Some(_rank), Some(activity), Some(score), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad());
            };
            path.activities.push(activity.parse().map_err(|_| bad())?);
            path.scores.push(score.trim().parse().map_err(|_| bad())?);
        }
        Ok(path)
    }

    /// Activity names joined with `;`.
    pub fn joined(&self) -> String {
        self.activities.iter().map(|a| a.name()).collect::<Vec<_>>().join(";")
    }
}

/// `min(max(2, ⌈top_fraction · n⌉), n)`.
pub fn key_path_size(top_fraction: f64, n: usize) -> usize {
    let raw = (top_fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    raw.max(2).min(n)
}

fn rank_by_score(vertices: &[ActivityKind], scores: &[f64], keep: usize) -> KeyPath {
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(vertices[a].cmp(&vertices[b]))
    });
    order.truncate(keep);
    KeyPath {
        activities: order.iter().map(|&i| vertices[i]).collect(),
        scores: order.iter().map(|&i| scores[i]).collect(),
    }
}

/// Correlation graph → transition matrix → walk; keeps the most visited
/// activities (ties in catalog order).
pub fn extract_key_path(matrix: &FeatureMatrix, config: &WalkConfig, top_fraction: f64) -> Result<KeyPath, WalkError> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(WalkError::InvalidConfig(format!(
            "top fraction {top_fraction} outside (0, 1]"
        )));
    }
    let graph = build_activity_graph(matrix)?;
    let tm = transition_matrix(&graph)?;
    let freq = graph_walk(&tm, config)?;
    Ok(rank_by_score(
        &graph.vertices,
        &freq,
        key_path_size(top_fraction, graph.len()),
    ))
}

/// Key path from the descent search: activities whose coordinate in the
/// optimum (clipped to `[0, 1]`) reaches 0.5, at least two of them.
pub fn descent_key_path(matrix: &FeatureMatrix, config: &WalkConfig) -> Result<KeyPath, WalkError> {
    let graph = build_activity_graph(matrix)?;
    let objective = CorrelationObjective::new(&graph);
    let outcome = rw_descent(&objective, &vec![0.5; graph.len()], config)?;
    let scores: Vec<f64> = outcome.x_best.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let selected = scores.iter().filter(|&&s| s >= 0.5).count();
    Ok(rank_by_score(&graph.vertices, &scores, selected.max(2)))
}

/// Restricts the matrix to the key-path activities, in key-path order.
pub fn project_features(matrix: &FeatureMatrix, path: &KeyPath) -> Result<FeatureMatrix, WalkError> {
    let columns = path
        .activities
        .iter()
        .map(|a| {
            matrix
                .feature_names()
                .iter()
                .position(|f| f == a)
                .ok_or(WalkError::UnknownActivity(*a))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(matrix.select_columns(&columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn matrix(columns: &[Vec<f64>]) -> FeatureMatrix {
        let n = columns[0].len();
        let rows = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        FeatureMatrix::new(
            "g",
            ActivityKind::ALL[..columns.len()].to_vec(),
            (0..n).map(|i| format!("r{i}")).collect(),
            rows,
            None,
        )
        .unwrap()
    }

    /// Textbook formula evaluated independently of [`pearson`].
    fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    /// Stationary distribution by repeated multiplication.
    fn power_iteration(p: &[Vec<f64>]) -> Vec<f64> {
        let n = p.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..10_000 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[j] += pi[i] * p[i][j];
                }
            }
            pi = next;
        }
        pi
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        let y = [2.0, 4.0, 7.0];
        assert!((pearson(&x, &y).unwrap() - pearson_direct(&x, &y)).abs() < 1e-12);
        assert_eq!(pearson(&x, &[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(pearson(&x, &y[..2]), Err(WalkError::LengthMismatch(3, 2)));
    }

    #[test]
    fn graph_examples() {
        let a = vec![0.1, 0.5, 0.2, 0.9, 0.4, 0.3];
        let neg: Vec<f64> = a.iter().map(|v| 1.0 - v).collect();
        let g = build_activity_graph(&matrix(&[a.clone(), a.clone(), neg, vec![0.3; 6]])).unwrap();
        assert!((g.weights[0][1] - 1.0).abs() < 1e-12);
        assert!((g.weights[0][2] + 1.0).abs() < 1e-12);
        assert_eq!(g.weights[3], vec![0.0; 4]);

        let cols = [
            vec![1.0, 3.0, 2.0, 5.0, 4.0, 6.0],
            vec![2.0, 1.0, 4.0, 3.0, 6.0, 5.0],
            vec![9.0, 7.0, 8.0, 3.0, 1.0, 2.0],
        ];
        let g = build_activity_graph(&matrix(&cols)).unwrap();
        for i in 0..3 {
            assert_eq!(g.weights[i][i], 0.0);
            for j in 0..3 {
                assert_eq!(g.weights[i][j], g.weights[j][i]);
                if i != j {
                    assert!((g.weights[i][j] - pearson_direct(&cols[i], &cols[j])).abs() < 1e-9);
                }
            }
        }

        assert_eq!(
            build_activity_graph(&matrix(std::slice::from_ref(&a))),
            Err(WalkError::TooFewFeatures(1))
        );
        assert_eq!(
            build_activity_graph(&matrix(&[vec![1.0], vec![2.0]])),
            Err(WalkError::TooFewRows(1))
        );
    }

    fn graph(weights: Vec<Vec<f64>>) -> ActivityGraph {
        ActivityGraph {
            vertices: ActivityKind::ALL[..weights.len()].to_vec(),
            weights,
        }
    }

    #[test]
    fn transition_examples() {
        let tm = transition_matrix(&graph(vec![vec![0.0, 0.4], vec![0.4, 0.0]])).unwrap();
        assert_eq!(tm.p, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let tm = transition_matrix(&graph(vec![
            vec![0.0, -0.5, -0.2],
            vec![-0.5, 0.0, 0.6],
            vec![-0.2, 0.6, 0.0],
        ]))
        .unwrap();
        assert_eq!(tm.p[0], vec![0.0, 0.5, 0.5]);
        assert_eq!(tm.p[1], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn alternating_chain_splits_visits() {
        let tm = TransitionMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let cfg = WalkConfig {
            steps: Some(101),
            ..WalkConfig::default()
        };
        let f = graph_walk(&tm, &cfg).unwrap();
        assert!((f[0] - 0.5).abs() <= 1.0 / 101.0);
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn walk_frequencies_approach_stationary_vector() {
        let p = vec![vec![0.0, 0.7, 0.3], vec![0.5, 0.0, 0.5], vec![0.2, 0.8, 0.0]];
        let pi = power_iteration(&p);
        let tm = TransitionMatrix::from_rows(p).unwrap();
        let f = graph_walk(
            &tm,
            &WalkConfig {
                steps: Some(100_000),
                seed: 3,
                ..WalkConfig::default()
            },
        )
        .unwrap();
        for (a, b) in f.iter().zip(&pi) {
            assert!((a - b).abs() < 0.05, "{f:?} vs {pi:?}");
        }
    }

    #[test]
    fn descent_finds_quadratic_minimum() {
        let c = [0.3, 0.7];
        let f = |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let out = rw_descent(&f, &[0.0, 0.0], &WalkConfig::default()).unwrap();
        let err = out
            .x_best
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err < 0.05, "{out:?}");
        assert!(out.f_best <= f(&[0.0, 0.0]));
        assert!(out.accepted.windows(2).all(|w| w[1] < w[0]));
        assert!(out.final_lambda < 1e-4);
    }

    #[test]
    fn descent_on_constant_objective_never_moves() {
        let cfg = WalkConfig::default();
        let out = rw_descent(&|_: &[f64]| 1.0, &[0.2, 0.4, 0.6], &cfg).unwrap();
        assert_eq!(out.x_best, vec![0.2, 0.4, 0.6]);
        let expected = (cfg.lambda0 / cfg.epsilon).log2().ceil() as usize;
        assert_eq!(out.rounds, expected);
        assert_eq!(out.evaluations, 1 + expected * cfg.max_tries);
        assert!(out.accepted.is_empty());
    }

    #[test]
    fn descent_rejects_non_finite_objective() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { 0.0 };
        assert_eq!(
            rw_descent(&f, &[0.0], &WalkConfig::default()),
            Err(WalkError::NonFiniteObjective)
        );
        assert_eq!(
            rw_descent(&|_: &[f64]| f64::INFINITY, &[0.0], &WalkConfig::default()),
            Err(WalkError::NonFiniteObjective)
        );
    }

    /// Two strongly correlated columns among independent noise columns.
    fn correlated_fixture(seed: u64, noise_columns: usize, rows: usize) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![Vec::new(); noise_columns + 2];
        for _ in 0..rows {
            let base: f64 = rng.random();
            cols[0].push(base + 0.05 * rng.random::<f64>());
            for c in cols.iter_mut().skip(2) {
                c.push(rng.random());
            }
            cols[1].push(base + 0.05 * rng.random::<f64>());
        }
        // put the correlated pair in the middle of the catalog ordering
        cols.swap(0, noise_columns / 2);
        cols.swap(1, noise_columns / 2 + 1);
        matrix(&cols)
    }

    #[test]
    fn key_path_keeps_everything_at_full_fraction() {
        let m = correlated_fixture(1, 4, 100);
        let path = extract_key_path(&m, &WalkConfig::default(), 1.0).unwrap();
        assert_eq!(path.len(), 6);
        let mut sorted = path.activities.clone();
        sorted.sort();
        assert_eq!(sorted, m.feature_names());
        assert!(path.scores.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn key_path_finds_correlated_pair_across_seeds() {
        let mut hits = 0;
        for seed in 0..50 {
            let m = correlated_fixture(seed, 8, 200);
            let pair = [m.feature_names()[4], m.feature_names()[5]];
            let cfg = WalkConfig {
                seed,
                ..WalkConfig::default()
            };
            let path = extract_key_path(&m, &cfg, 0.5).unwrap();
            hits += usize::from(pair.iter().all(|a| path.activities.contains(a)));
        }
        assert!(hits >= 45, "{hits}/50");
    }

    #[test]
    fn descent_key_path_prefers_correlated_pair() {
        let m = correlated_fixture(4, 4, 200);
        let path = descent_key_path(&m, &WalkConfig::default()).unwrap();
        assert!(path.len() >= 2);
        assert!(path.activities.contains(&m.feature_names()[2]));
        assert!(path.activities.contains(&m.feature_names()[3]));
    }

    #[test]
    fn key_path_sizes() {
        assert_eq!(key_path_size(0.6, 16), 10);
        assert_eq!(key_path_size(0.7, 10), 7);
        assert_eq!(key_path_size(0.01, 10), 2);
        assert_eq!(key_path_size(0.5, 2), 2);
        assert_eq!(key_path_size(1.0, 5), 5);
        let m = correlated_fixture(2, 0, 20);
        assert_eq!(extract_key_path(&m, &WalkConfig::default(), 0.1).unwrap().len(), 2);
        assert!(extract_key_path(&m, &WalkConfig::default(), 0.0).is_err());
    }

    #[test]
    fn key_path_text_round_trip() {
        let path = KeyPath {
            activities: vec![ActivityKind::Homepage, ActivityKind::Forumng],
            scores: vec![0.55, 0.45],
        };
        assert_eq!(path.render(), "1,homepage,0.55\n2,forumng,0.45\n");
        assert_eq!(KeyPath::parse(&path.render()).unwrap(), path);
        assert!(KeyPath::parse("1,nope,0.1").is_err());
    }

    #[test]
    fn projection_examples() {
        let m = correlated_fixture(3, 8, 10);
        let all = KeyPath {
            activities: m.feature_names().to_vec(),
            scores: vec![0.1; 10],
        };
        assert_eq!(project_features(&m, &all).unwrap(), m);

        let two = KeyPath {
            activities: vec![m.feature_names()[7], m.feature_names()[1]],
            scores: vec![0.6, 0.4],
        };
        let p = project_features(&m, &two).unwrap();
        assert_eq!(p.n_features(), 2);
        assert_eq!(p.n_rows(), m.n_rows());
        for (orig, proj) in m.rows().iter().zip(p.rows()) {
            assert_eq!(proj, &vec![orig[7], orig[1]]);
        }

        let missing = KeyPath {
            activities: vec![ActivityKind::Url],
            scores: vec![1.0],
        };
        assert_eq!(
            project_features(&m, &missing),
            Err(WalkError::UnknownActivity(ActivityKind::Url))
        );
    }

    proptest! {
        #[test]
        fn transition_rows_are_distributions(
            n in 2usize..9,
            raw in prop::collection::vec(-1.0f64..1.0, 64),
        ) {
            let mut w = vec![vec![0.0; n]; n];
            let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
            for (k, (i, j)) in pairs.enumerate() {
                w[i][j] = raw[k % raw.len()];
                w[j][i] = w[i][j];
            }
            let tm = transition_matrix(&graph(w)).unwrap();
            for row in &tm.p {
                prop_assert!(row.iter().all(|&v| v >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn walk_is_reproducible_and_normalized(seed in any::<u64>(), steps in 1usize..500) {
            let tm = TransitionMatrix::from_rows(vec![
                vec![0.0, 0.5, 0.5],
                vec![0.9, 0.0, 0.1],
                vec![0.3, 0.7, 0.0],
            ]).unwrap();
            let cfg = WalkConfig { seed, steps: Some(steps), ..WalkConfig::default() };
            let a = graph_walk(&tm, &cfg).unwrap();
            prop_assert_eq!(&a, &graph_walk(&tm, &cfg).unwrap());
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn descent_bookkeeping(seed in any::<u64>(), tries in 1usize..30) {
            let cfg = WalkConfig { seed, max_tries: tries, epsilon: 1e-3, ..WalkConfig::default() };
            let f = |x: &[f64]| (x[0] - 0.2).powi(2) + (x[1] + 0.4).abs();
            let out = rw_descent(&f, &[1.0, 1.0], &cfg).unwrap();
            prop_assert!(out.final_lambda < cfg.epsilon);
            prop_assert!(out.final_lambda * 2.0 >= cfg.epsilon);
            prop_assert!((out.final_lambda - cfg.lambda0 / 2f64.powi(out.rounds as i32)).abs() < 1e-15);
            let probes = out.evaluations - 1;
            let accepted = out.accepted.len();
            // every round ends with `tries` failures; each acceptance follows
            // fewer than `tries` failures
            prop_assert!(probes >= out.rounds * tries + accepted);
            prop_assert!(probes <= out.rounds * tries + accepted * tries);
            prop_assert!(out.accepted.windows(2).all(|w| w[1] < w[0]));
            prop_assert!(out.f_best <= f(&[1.0, 1.0]));
        }
    }
}
