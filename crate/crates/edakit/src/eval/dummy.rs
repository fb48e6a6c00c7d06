//! Label-only baseline classifiers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::metrics;
use super::EvalError;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DummyKind {
    /// Always the most frequent training class.
    MostFrequent,
    /// Uniform coin flips.
    Uniform,
    /// Draws from the training label distribution.
    Prior,
}

pub const ALL_DUMMIES: [DummyKind; 3] = [DummyKind::MostFrequent, DummyKind::Uniform, DummyKind::Prior];

#[derive(Debug, Clone)]
pub struct DummyOutcome {
    pub which: DummyKind,
    pub predictions: Vec<u8>,
    pub balanced_accuracy: f64,
    /// Test balanced accuracy of every candidate.
    pub all_scores: Vec<(DummyKind, f64)>,
}

fn predict(kind: DummyKind, y_train: &[u8], n_test: usize, seed: u64) -> Vec<u8> {
    match kind {
        DummyKind::MostFrequent => {
            let ones = y_train.iter().filter(|v| **v == 1).count();
            let zeros = y_train.len() - ones;
            // Ties resolve to class 0.
            let label = u8::from(ones > zeros);
            vec![label; n_test]
        }
        DummyKind::Uniform => {
            let mut rng = stream_rng(seed, 1);
            (0..n_test).map(|_| rng.random_range(0..2) as u8).collect()
        }
        DummyKind::Prior => {
            let p1 = y_train.iter().filter(|v| **v == 1).count() as f64 / y_train.len() as f64;
            let mut rng = stream_rng(seed, 2);
            (0..n_test)
                .map(|_| u8::from(rng.random::<f64>() < p1))
                .collect()
        }
    }
}

/// Evaluate the three dummies on the test labels and return the one
/// with the highest balanced accuracy (ties resolve toward
/// most-frequent via the fixed candidate order).
pub fn dummy_best(y_train: &[u8], y_test: &[u8], seed: u64) -> Result<DummyOutcome, EvalError> {
    if y_train.is_empty() || y_test.is_empty() {
        return Err(EvalError::Empty("dummy labels"));
    }
    for v in y_train.iter().chain(y_test) {
        if *v > 1 {
            return Err(EvalError::NonBinary(*v));
        }
    }

    let mut best: Option<DummyOutcome> = None;
    let mut all_scores = Vec::with_capacity(3);
    for kind in ALL_DUMMIES {
        let preds = predict(kind, y_train, y_test.len(), seed);
        let ba = metrics(y_test, &preds)?.balanced_accuracy;
        all_scores.push((kind, ba));
        let better = match &best {
            None => true,
            Some(b) => ba > b.balanced_accuracy,
        };
        if better {
            best = Some(DummyOutcome {
                which: kind,
                predictions: preds,
                balanced_accuracy: ba,
                all_scores: Vec::new(),
            });
        }
    }
    let mut out = best.expect("three candidates evaluated");
    out.all_scores = all_scores;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn most_frequent_on_balanced_test_scores_half() {
        let y_train = [1u8, 1, 1, 0];
        let y_test = [0u8, 1, 0, 1];
        let preds = predict(DummyKind::MostFrequent, &y_train, 4, 0);
        assert_eq!(preds, vec![1, 1, 1, 1]);
        let ba = metrics(&y_test, &preds).unwrap().balanced_accuracy;
        assert_eq!(ba, 0.5);
    }

    #[test]
    fn seeded_dummies_are_reproducible() {
        let y_train = [0u8, 1, 1];
        let a = predict(DummyKind::Uniform, &y_train, 50, 9);
        let b = predict(DummyKind::Uniform, &y_train, 50, 9);
        assert_eq!(a, b);
        let c = predict(DummyKind::Prior, &y_train, 50, 9);
        let d = predict(DummyKind::Prior, &y_train, 50, 9);
        assert_eq!(c, d);
        assert_ne!(predict(DummyKind::Uniform, &y_train, 50, 10), a);
    }

    #[test]
    fn winner_is_reported_with_all_scores() {
        let y_train = [1u8, 1, 1, 1, 0];
        let y_test = [1u8, 1, 1, 1, 1, 1, 0];
        let out = dummy_best(&y_train, &y_test, 3).unwrap();
        assert_eq!(out.all_scores.len(), 3);
        let max = out
            .all_scores
            .iter()
            .map(|(_, s)| *s)
            .fold(f64::MIN, f64::max);
        assert_eq!(out.balanced_accuracy, max);
        assert_eq!(out.predictions.len(), y_test.len());
    }

    #[test]
    fn tie_prefers_most_frequent() {
        // Single-class test set: most-frequent predicting that class
        // ties anything else that happens to match.
        let y_train = [1u8, 1, 0];
        let y_test = [1u8, 1, 1, 1];
        let out = dummy_best(&y_train, &y_test, 1).unwrap();
        // Most-frequent scores recall 1.0 on the positive class; no
        // other dummy can beat 1.0, so most-frequent wins ties.
        assert_eq!(out.which, DummyKind::MostFrequent);
        assert_eq!(out.balanced_accuracy, 1.0);
    }
}
