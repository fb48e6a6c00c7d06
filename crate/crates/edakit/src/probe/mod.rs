//! Linear probing: L2-penalized logistic regression with balanced
//! class weights, fit by L-BFGS, plus stratified inner-CV grid search
//! over the regularization strength.
//!
//! The objective is the weighted *mean* log-loss
//!
//! ```text
//! J(w, b) = (1/W) sum_i s_i * log(1 + exp(-m_i)) + (1/(2C)) ||w||^2
//! ```
//!
//! with margins `m_i = yhat_i (w . x_i + b)`, `yhat in {-1, +1}`,
//! balanced weights `s_i = n / (2 n_class(i))` and `W = sum_i s_i`.
//! Normalizing by the total weight makes the fit invariant to
//! duplicating every sample; the bias is never penalized. Features are
//! consumed raw (no standardization), matching the no-rescaling policy
//! of the rest of the pipeline; `fit_logreg_standardized` exists for
//! experiments.

mod logreg;

pub use logreg::{fit_logreg, fit_logreg_standardized, penalized_loss, LinearModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::metrics_bool;
use crate::rng::stream_rng;

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("need at least {needed} samples of class {class}, got {got}")]
    TooFewSamples { class: u8, needed: usize, got: usize },
    #[error("row {0} has {1} features, expected {2}")]
    DimMismatch(usize, usize, usize),
    #[error("empty dataset")]
    Empty,
}

/// Hyperparameter grid for the probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub c_values: Vec<f64>,
    pub max_iter: usize,
    /// Gradient infinity-norm convergence threshold.
    pub grad_tol: f64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self { c_values: vec![0.01, 0.1, 1.0, 10.0], max_iter: 10_000, grad_tol: 1e-6 }
    }
}

/// Inner-CV scores for one grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvScore {
    pub c: f64,
    pub mean_balanced_accuracy: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridReport {
    pub scores: Vec<CvScore>,
    pub chosen_c: f64,
}

/// Stratified fold assignment: per class, seeded shuffle then round
/// robin, so every fold keeps both classes.
fn stratified_folds(y: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut assignment = vec![0usize; y.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut stream_rng(seed, class as u64));
        for (pos, i) in idx.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    assignment
}

/// Grid search over `C` with stratified inner cross-validation,
/// selecting the highest mean inner balanced accuracy (ties resolve to
/// the smallest `C`), then refitting on all data.
pub fn grid_select(
    x: &[Vec<f64>],
    y: &[bool],
    grid: &ProbeGrid,
    inner_folds: usize,
    seed: u64,
) -> Result<(LinearModel, GridReport), ProbeError> {
    if x.is_empty() || y.is_empty() {
        return Err(ProbeError::Empty);
    }
    let pos = y.iter().filter(|v| **v).count();
    let neg = y.len() - pos;
    for (class, count) in [(1u8, pos), (0u8, neg)] {
        if count < inner_folds {
            return Err(ProbeError::TooFewSamples { class, needed: inner_folds, got: count });
        }
    }

    let assignment = stratified_folds(y, inner_folds, seed);
    let mut scores = Vec::with_capacity(grid.c_values.len());
    let mut best: Option<(f64, f64)> = None; // (mean BA, C)

    for &c in &grid.c_values {
        let mut fold_scores = Vec::with_capacity(inner_folds);
        for fold in 0..inner_folds {
            let mut x_tr = Vec::new();
            let mut y_tr = Vec::new();
            let mut x_te = Vec::new();
            let mut y_te = Vec::new();
            for i in 0..y.len() {
                if assignment[i] == fold {
                    x_te.push(x[i].clone());
                    y_te.push(y[i]);
                } else {
                    x_tr.push(x[i].clone());
                    y_tr.push(y[i]);
                }
            }
            let model = fit_logreg(&x_tr, &y_tr, c, grid)?;
            let preds: Vec<bool> = x_te.iter().map(|r| model.predict(r)).collect();
            let ba = metrics_bool(&y_te, &preds)
                .expect("equal-length binary labels")
                .balanced_accuracy;
            fold_scores.push(ba);
        }
        let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        scores.push(CvScore { c, mean_balanced_accuracy: mean, fold_scores });
        let improved = match best {
            None => true,
            Some((best_mean, _)) => mean > best_mean,
        };
        if improved {
            best = Some((mean, c));
        }
    }

    let chosen_c = best.expect("non-empty grid").1;
    let mut model = fit_logreg(x, y, chosen_c, grid)?;
    model.chosen_c = chosen_c;
    Ok((model, GridReport { scores, chosen_c }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<bool>) {
        let x: Vec<Vec<f64>> = (-6..=-1)
            .chain(1..=6)
            .map(|v| vec![v as f64])
            .collect();
        let y: Vec<bool> = (-6..=-1).map(|_| false).chain((1..=6).map(|_| true)).collect();
        (x, y)
    }

    #[test]
    fn ties_choose_the_smallest_c() {
        let (x, y) = separable();
        let (model, report) = grid_select(&x, &y, &ProbeGrid::default(), 3, 0).unwrap();
        // Trivially separable: every C scores 1.0 -> pick 0.01.
        assert!(report
            .scores
            .iter()
            .all(|s| (s.mean_balanced_accuracy - 1.0).abs() < 1e-12));
        assert_eq!(model.chosen_c, 0.01);
    }

    #[test]
    fn all_grid_points_are_reported() {
        let (x, y) = separable();
        let (_, report) = grid_select(&x, &y, &ProbeGrid::default(), 3, 1).unwrap();
        let cs: Vec<f64> = report.scores.iter().map(|s| s.c).collect();
        assert_eq!(cs, vec![0.01, 0.1, 1.0, 10.0]);
        assert!(report.scores.iter().all(|s| s.fold_scores.len() == 3));
    }

    #[test]
    fn selection_is_deterministic() {
        use rand::Rng;
        let mut rng = stream_rng(55, 0);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] + 0.3 * r[1] > 0.1).collect();
        let a = grid_select(&x, &y, &ProbeGrid::default(), 3, 9).unwrap();
        let b = grid_select(&x, &y, &ProbeGrid::default(), 3, 9).unwrap();
        assert_eq!(a.0.chosen_c, b.0.chosen_c);
        assert_eq!(a.0.weights, b.0.weights);
    }

    #[test]
    fn too_few_samples_rejected() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![false, true, true, true];
        assert!(matches!(
            grid_select(&x, &y, &ProbeGrid::default(), 3, 0),
            Err(ProbeError::TooFewSamples { class: 0, .. })
        ));
    }

    #[test]
    fn stratified_folds_keep_both_classes() {
        let y: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let assignment = stratified_folds(&y, 3, 4);
        for fold in 0..3 {
            let labels: Vec<bool> = (0..30)
                .filter(|&i| assignment[i] == fold)
                .map(|i| y[i])
                .collect();
            assert!(labels.iter().any(|v| *v));
            assert!(labels.iter().any(|v| !*v));
        }
    }
}
