//! Binary classification metrics from the confusion matrix.

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// Count the confusion matrix; labels must be 0/1.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<Confusion, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut c = Confusion::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t > 1 {
            return Err(EvalError::NonBinary(t));
        }
        if p > 1 {
            return Err(EvalError::NonBinary(p));
        }
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fp += 1,
            (1, 0) => c.fn_ += 1,
            _ => unreachable!(),
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricsTriple {
    pub balanced_accuracy: f64,
    pub mcc: f64,
    pub f1: f64,
}

/// Balanced accuracy, Matthews correlation and F1.
///
/// Balanced accuracy averages the recalls of the classes present in
/// `y_true` (both, normally). MCC is 0 whenever a marginal factor is 0;
/// F1 is 0 when its denominator is 0.
pub fn metrics(y_true: &[u8], y_pred: &[u8]) -> Result<MetricsTriple, EvalError> {
    let c = confusion(y_true, y_pred)?;
    Ok(from_confusion(c))
}

pub fn metrics_bool(y_true: &[bool], y_pred: &[bool]) -> Result<MetricsTriple, EvalError> {
    let t: Vec<u8> = y_true.iter().map(|v| *v as u8).collect();
    let p: Vec<u8> = y_pred.iter().map(|v| *v as u8).collect();
    metrics(&t, &p)
}

fn from_confusion(c: Confusion) -> MetricsTriple {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);

    let mut rates = Vec::with_capacity(2);
    if tp + fn_ > 0.0 {
        rates.push(tp / (tp + fn_));
    }
    if tn + fp > 0.0 {
        rates.push(tn / (tn + fp));
    }
    let balanced_accuracy = if rates.is_empty() {
        f64::NAN
    } else {
        rates.iter().sum::<f64>() / rates.len() as f64
    };

    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if denom == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / denom.sqrt()
    };

    let f1_denom = 2.0 * tp + fp + fn_;
    let f1 = if f1_denom == 0.0 { 0.0 } else { 2.0 * tp / f1_denom };

    MetricsTriple { balanced_accuracy, mcc, f1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_scores_one() {
        let y = [0u8, 1, 0, 1, 1];
        let m = metrics(&y, &y).unwrap();
        assert_eq!(m.balanced_accuracy, 1.0);
        assert_eq!(m.mcc, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn derived_confusion_case() {
        // TP=3, FN=1, TN=2, FP=4 -> BA = (0.75 + 2/6) / 2.
        let y_true = [1u8, 1, 1, 1, 0, 0, 0, 0, 0, 0];
        let y_pred = [1u8, 1, 1, 0, 1, 1, 1, 1, 0, 0];
        let c = confusion(&y_true, &y_pred).unwrap();
        assert_eq!((c.tp, c.fn_, c.tn, c.fp), (3, 1, 2, 4));
        let m = metrics(&y_true, &y_pred).unwrap();
        let want = (0.75 + 2.0 / 6.0) / 2.0;
        assert!((m.balanced_accuracy - want).abs() < 1e-12);
        assert!((m.balanced_accuracy - 0.5416666666666666).abs() < 1e-12);
    }

    #[test]
    fn constant_predictor_on_balanced_set_scores_half() {
        let y_true = [0u8, 1, 0, 1];
        let y_pred = [1u8, 1, 1, 1];
        let m = metrics(&y_true, &y_pred).unwrap();
        assert_eq!(m.balanced_accuracy, 0.5);
        assert_eq!(m.mcc, 0.0); // tn + fn factor is 0
    }

    #[test]
    fn guards_fire() {
        assert_eq!(
            metrics(&[0, 1], &[0]).unwrap_err(),
            EvalError::LengthMismatch(2, 1)
        );
        assert_eq!(metrics(&[0, 2], &[0, 1]).unwrap_err(), EvalError::NonBinary(2));
    }

    #[test]
    fn duplication_leaves_balanced_accuracy_unchanged() {
        let y_true = [1u8, 0, 0, 1, 1, 0];
        let y_pred = [1u8, 0, 1, 1, 0, 0];
        let base = metrics(&y_true, &y_pred).unwrap().balanced_accuracy;
        for k in [2usize, 5] {
            let t: Vec<u8> = y_true.iter().flat_map(|v| std::iter::repeat_n(*v, k)).collect();
            let p: Vec<u8> = y_pred.iter().flat_map(|v| std::iter::repeat_n(*v, k)).collect();
            let m = metrics(&t, &p).unwrap();
            assert!((m.balanced_accuracy - base).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_brute_force_on_random_vectors() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(33, 0);
        for _ in 0..200 {
            let n = rng.random_range(2..40);
            let y_true: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            let y_pred: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            let m = metrics(&y_true, &y_pred).unwrap();

            // Brute force recount.
            let tp = y_true.iter().zip(&y_pred).filter(|(t, p)| **t == 1 && **p == 1).count() as f64;
            let tn = y_true.iter().zip(&y_pred).filter(|(t, p)| **t == 0 && **p == 0).count() as f64;
            let fp = y_true.iter().zip(&y_pred).filter(|(t, p)| **t == 0 && **p == 1).count() as f64;
            let fn_ = y_true.iter().zip(&y_pred).filter(|(t, p)| **t == 1 && **p == 0).count() as f64;
            let mut rates = vec![];
            if tp + fn_ > 0.0 { rates.push(tp / (tp + fn_)); }
            if tn + fp > 0.0 { rates.push(tn / (tn + fp)); }
            let ba = rates.iter().sum::<f64>() / rates.len() as f64;
            assert!((m.balanced_accuracy - ba).abs() < 1e-12);
            let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
            let mcc = if denom == 0.0 { 0.0 } else { (tp * tn - fp * fn_) / denom.sqrt() };
            assert!((m.mcc - mcc).abs() < 1e-12);
            let f1d = 2.0 * tp + fp + fn_;
            let f1 = if f1d == 0.0 { 0.0 } else { 2.0 * tp / f1d };
            assert!((m.f1 - f1).abs() < 1e-12);
        }
    }
}
