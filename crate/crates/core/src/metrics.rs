//! Pairwise clustering scores and a wall-clock timing helper.
//!
//! Every unordered pair of points is one "sample": it is positive when both
//! points share a predicted cluster and correct when that agrees with the
//! ground truth. Points whose truth label is −1 take part in no pair.

use std::collections::HashMap;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("label vectors differ in length ({truth} truth vs {predicted} predicted)")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("confusion counts are all zero")]
    EmptyConfusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairConfusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl PairConfusion {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreBundle {
    pub precise: f64,
    pub accuracy: f64,
    pub recall: f64,
    pub f_score: f64,
}

impl ScoreBundle {
    pub fn from_confusion(c: &PairConfusion) -> Result<Self, MetricsError> {
        Ok(Self {
            precise: precise(c),
            accuracy: accuracy(c)?,
            recall: recall(c),
            f_score: f_score(c),
        })
    }

    pub fn evaluate(truth: &[i64], predicted: &[i64]) -> Result<Self, MetricsError> {
        Self::from_confusion(&pair_confusion(truth, predicted)?)
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Counts point pairs by truth/prediction co-membership from the contingency
/// table, in O(n) rather than O(n²).
pub fn pair_confusion(truth: &[i64], predicted: &[i64]) -> Result<PairConfusion, MetricsError> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    let mut cells: HashMap<(i64, i64), u64> = HashMap::new();
    let mut truth_sizes: HashMap<i64, u64> = HashMap::new();
    let mut pred_sizes: HashMap<i64, u64> = HashMap::new();
    let mut n = 0u64;
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == -1 {
            continue;
        }
        n += 1;
        *cells.entry((t, p)).or_default() += 1;
        *truth_sizes.entry(t).or_default() += 1;
        *pred_sizes.entry(p).or_default() += 1;
    }
    let tp: u64 = cells.values().map(|&c| pairs(c)).sum();
    let same_pred: u64 = pred_sizes.values().map(|&c| pairs(c)).sum();
    let same_truth: u64 = truth_sizes.values().map(|&c| pairs(c)).sum();
    let fp = same_pred - tp;
    let fn_ = same_truth - tp;
    let tn = pairs(n) - tp - fp - fn_;
    Ok(PairConfusion { tp, fp, tn, fn_ })
}

/// TP / (TP + FP); 0 when nothing was predicted positive.
pub fn precise(c: &PairConfusion) -> f64 {
    let denom = c.tp + c.fp;
    if denom == 0 {
        0.0
    } else {
        c.tp as f64 / denom as f64
    }
}

/// (TP + TN) / total.
pub fn accuracy(c: &PairConfusion) -> Result<f64, MetricsError> {
    let total = c.total();
    if total == 0 {
        return Err(MetricsError::EmptyConfusion);
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}

/// TP / (TP + FN); 0 when there are no actual positives.
pub fn recall(c: &PairConfusion) -> f64 {
    let denom = c.tp + c.fn_;
    if denom == 0 {
        0.0
    } else {
        c.tp as f64 / denom as f64
    }
}

pub fn f_score(c: &PairConfusion) -> f64 {
    let (p, r) = (precise(c), recall(c));
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Runs `run` once and returns its result with the elapsed wall time in
/// seconds (monotonic clock).
pub fn benchmark<T>(run: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = run();
    (out, start.elapsed().as_secs_f64())
}
