//! Downstream evaluation: cross-validation plans, classification
//! metrics, dummy baselines and the rank statistics used to compare
//! methods across experiments.

mod dummy;
mod folds;
mod metrics;
mod stats;

pub use dummy::{dummy_best, DummyKind, DummyOutcome};
pub use folds::{make_folds, ExcludedUser, Fold, FoldPlan, Protocol, TA_FOLDS};
pub use metrics::{confusion, metrics, metrics_bool, Confusion, MetricsTriple};
pub use stats::{friedman_nemenyi, paired_ttest_bonferroni, studentized_range_sf, FriedmanNemenyi};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("label vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-binary label value {0} (expected 0 or 1)")]
    NonBinary(u8),
    #[error("need at least {needed} users for {protocol:?}, got {got}")]
    TooFewUsers { protocol: Protocol, needed: usize, got: usize },
    #[error("need at least 2 methods for a rank test, got {0}")]
    TooFewMethods(usize),
    #[error("at most 20 methods supported by the studentized-range table, got {0}")]
    TooManyMethods(usize),
    #[error("need at least 2 experiments after dropping incomplete ones, got {0}")]
    TooFewExperiments(usize),
    #[error("paired difference has zero variance; p-value undefined")]
    ZeroVariance,
    #[error("scores ragged: method {0} has {1} experiments, expected {2}")]
    RaggedScores(usize, usize, usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

/// Mean and standard error over per-fold values
/// (`SE = sample std / sqrt(#folds)`).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt() / (n as f64).sqrt())
}

/// Per-fold metric values with their mean and standard error.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MetricReport {
    pub balanced_accuracy: (f64, f64),
    pub mcc: (f64, f64),
    pub f1: (f64, f64),
    pub per_fold: Vec<MetricsTriple>,
}

impl MetricReport {
    pub fn from_folds(per_fold: Vec<MetricsTriple>) -> Self {
        let ba: Vec<f64> = per_fold.iter().map(|m| m.balanced_accuracy).collect();
        let mcc: Vec<f64> = per_fold.iter().map(|m| m.mcc).collect();
        let f1: Vec<f64> = per_fold.iter().map(|m| m.f1).collect();
        Self {
            balanced_accuracy: mean_se(&ba),
            mcc: mean_se(&mcc),
            f1: mean_se(&f1),
            per_fold,
        }
    }
}
