//! The penalized logistic regression core and its L-BFGS solver.

use super::{ProbeError, ProbeGrid};

/// A fitted linear decision function.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub chosen_c: f64,
    pub converged: bool,
    /// Feature means/stds when the standardized entry point was used.
    pub standardize: Option<(Vec<f64>, Vec<f64>)>,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut z = self.bias;
        match &self.standardize {
            None => {
                for (w, v) in self.weights.iter().zip(x) {
                    z += w * v;
                }
            }
            Some((mean, std)) => {
                for i in 0..self.weights.len() {
                    z += self.weights[i] * (x[i] - mean[i]) / std[i];
                }
            }
        }
        z
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }
}

fn validate(x: &[Vec<f64>], y: &[bool]) -> Result<usize, ProbeError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(ProbeError::Empty);
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(ProbeError::DimMismatch(i, row.len(), d));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ProbeError::NonFinite(format!("feature row {i}")));
        }
    }
    let pos = y.iter().filter(|v| **v).count();
    if pos == 0 || pos == y.len() {
        return Err(ProbeError::SingleClass);
    }
    Ok(d)
}

/// Weighted-mean log-loss with L2 penalty on the weights; returns the
/// objective and its gradient over `[weights..., bias]`.
fn objective(
    x: &[Vec<f64>],
    y: &[bool],
    sample_w: &[f64],
    total_w: f64,
    c: f64,
    theta: &[f64],
) -> (f64, Vec<f64>) {
    let d = theta.len() - 1;
    let (w, b) = (&theta[..d], theta[d]);
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for ((row, &label), &s) in x.iter().zip(y).zip(sample_w) {
        let mut z = b;
        for (wi, v) in w.iter().zip(row) {
            z += wi * v;
        }
        let yhat = if label { 1.0 } else { -1.0 };
        let m = yhat * z;
        // log(1 + exp(-m)), stable on both tails.
        loss += s * if m > 0.0 {
            (-m).exp().ln_1p()
        } else {
            -m + m.exp().ln_1p()
        };
        // d/dz = sigmoid(z) - y01.
        let sig = 1.0 / (1.0 + (-z).exp());
        let y01 = if label { 1.0 } else { 0.0 };
        let gz = s * (sig - y01);
        for (gi, v) in grad[..d].iter_mut().zip(row) {
            *gi += gz * v;
        }
        grad[d] += gz;
    }
    loss /= total_w;
    for g in &mut grad {
        *g /= total_w;
    }
    let mut pen = 0.0;
    for (gi, wi) in grad[..d].iter_mut().zip(w) {
        pen += wi * wi;
        *gi += wi / c;
    }
    (loss + pen / (2.0 * c), grad)
}

fn balanced_weights(y: &[bool]) -> (Vec<f64>, f64) {
    let n = y.len() as f64;
    let pos = y.iter().filter(|v| **v).count() as f64;
    let neg = n - pos;
    let (w_pos, w_neg) = (n / (2.0 * pos), n / (2.0 * neg));
    let sample_w: Vec<f64> = y.iter().map(|&l| if l { w_pos } else { w_neg }).collect();
    let total_w: f64 = sample_w.iter().sum();
    (sample_w, total_w)
}

/// The probe's training objective and gradient at `theta`
/// (`[weights..., bias]`), with balanced class weights. Exposed so the
/// gradient can be verified against finite differences.
pub fn penalized_loss(x: &[Vec<f64>], y: &[bool], c: f64, theta: &[f64]) -> (f64, Vec<f64>) {
    let (sample_w, total_w) = balanced_weights(y);
    objective(x, y, &sample_w, total_w, c, theta)
}

/// Fit with balanced class weights `s_i = n / (2 n_class)`.
pub fn fit_logreg(
    x: &[Vec<f64>],
    y: &[bool],
    c: f64,
    grid: &ProbeGrid,
) -> Result<LinearModel, ProbeError> {
    let d = validate(x, y)?;
    let (sample_w, total_w) = balanced_weights(y);

    let eval = |theta: &[f64]| objective(x, y, &sample_w, total_w, c, theta);
    let (theta, converged) = lbfgs(eval, d + 1, grid.max_iter, grid.grad_tol);
    Ok(LinearModel {
        weights: theta[..d].to_vec(),
        bias: theta[d],
        chosen_c: c,
        converged,
        standardize: None,
    })
}

/// Optional standardized variant (off the default path).
pub fn fit_logreg_standardized(
    x: &[Vec<f64>],
    y: &[bool],
    c: f64,
    grid: &ProbeGrid,
) -> Result<LinearModel, ProbeError> {
    let d = validate(x, y)?;
    let n = x.len() as f64;
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; d];
    for row in x {
        for i in 0..d {
            std[i] += (row[i] - mean[i]).powi(2) / n;
        }
    }
    for s in &mut std {
        *s = s.sqrt().max(1e-12);
    }
    let xs: Vec<Vec<f64>> = x
        .iter()
        .map(|row| (0..d).map(|i| (row[i] - mean[i]) / std[i]).collect())
        .collect();
    let mut model = fit_logreg(&xs, y, c, grid)?;
    model.standardize = Some((mean, std));
    Ok(model)
}

/// Limited-memory BFGS with Armijo backtracking.
fn lbfgs(
    eval: impl Fn(&[f64]) -> (f64, Vec<f64>),
    dim: usize,
    max_iter: usize,
    grad_tol: f64,
) -> (Vec<f64>, bool) {
    const MEMORY: usize = 10;
    let mut theta = vec![0.0; dim];
    let (mut f, mut g) = eval(&theta);
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> =
        std::collections::VecDeque::new();

    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    for _ in 0..max_iter {
        if inf_norm(&g) < grad_tol {
            return (theta, true);
        }

        // Two-loop recursion for the search direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let alpha = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= alpha * yi;
            }
            alphas.push(alpha);
        }
        if let Some((s, yv, _)) = history.back() {
            let gamma = dot(s, yv) / dot(yv, yv);
            for qi in &mut q {
                *qi *= gamma;
            }
        }
        for ((s, yv, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (alpha - beta) * si;
            }
        }
        let dir: Vec<f64> = q.iter().map(|v| -v).collect();

        // Backtracking Armijo line search.
        let slope = dot(&g, &dir);
        if slope >= 0.0 {
            // Direction lost descent (numerical); restart from the
            // gradient.
            history.clear();
            continue;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(&dir)
                .map(|(t, d)| t + step * d)
                .collect();
            let (fc, gc) = eval(&cand);
            if fc <= f + 1e-4 * step * slope {
                let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
                let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &yv);
                if sy > 1e-12 {
                    if history.len() == MEMORY {
                        history.pop_front();
                    }
                    history.push_back((s, yv, 1.0 / sy));
                }
                theta = cand;
                f = fc;
                g = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No further progress at f64 resolution.
            return (theta, inf_norm(&g) < grad_tol);
        }
    }
    let converged = inf_norm(&g) < grad_tol;
    (theta, converged)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ProbeGrid {
        ProbeGrid::default()
    }

    #[test]
    fn separable_data_is_classified_perfectly() {
        let x: Vec<Vec<f64>> = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
        let y = vec![false, false, true, true];
        for c in [0.01, 0.1, 1.0, 10.0] {
            let model = fit_logreg(&x, &y, c, &grid()).unwrap();
            let correct = x
                .iter()
                .zip(&y)
                .filter(|(r, l)| model.predict(r) == **l)
                .count();
            assert_eq!(correct, 4, "C = {c}");
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert_eq!(
            fit_logreg(&x, &[false, false], 1.0, &grid()).unwrap_err(),
            ProbeError::SingleClass
        );
    }

    #[test]
    fn non_finite_rejected() {
        let x = vec![vec![0.0], vec![f64::NAN]];
        assert!(matches!(
            fit_logreg(&x, &[false, true], 1.0, &grid()),
            Err(ProbeError::NonFinite(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(61, 0);
        let n = 24;
        let d = 5;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
        let pos = y.iter().filter(|v| **v).count() as f64;
        let neg = n as f64 - pos;
        let sw: Vec<f64> = y
            .iter()
            .map(|&l| if l { n as f64 / (2.0 * pos) } else { n as f64 / (2.0 * neg) })
            .collect();
        let total: f64 = sw.iter().sum();

        let mut theta: Vec<f64> = (0..d + 1).map(|_| rng.random_range(-0.5..0.5)).collect();
        let (_, grad) = objective(&x, &y, &sw, total, 0.7, &theta);
        let mut max_rel: f64 = 0.0;
        for i in 0..theta.len() {
            let orig = theta[i];
            let h = 1e-6 * orig.abs().max(1.0);
            theta[i] = orig + h;
            let (up, _) = objective(&x, &y, &sw, total, 0.7, &theta);
            theta[i] = orig - h;
            let (down, _) = objective(&x, &y, &sw, total, 0.7, &theta);
            theta[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-9);
            max_rel = max_rel.max(rel);
        }
        assert!(max_rel < 1e-5, "max rel {max_rel}");
    }

    #[test]
    fn duplicating_every_sample_keeps_the_decision_function() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(62, 0);
        let x: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] - 0.5 * r[2] > 0.0).collect();
        let base = fit_logreg(&x, &y, 1.0, &grid()).unwrap();

        let mut x2 = x.clone();
        x2.extend(x.iter().cloned());
        let mut y2 = y.clone();
        y2.extend(y.iter().cloned());
        let dup = fit_logreg(&x2, &y2, 1.0, &grid()).unwrap();

        for (a, b) in base.weights.iter().zip(&dup.weights) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!((base.bias - dup.bias).abs() < 1e-8);
    }

    #[test]
    fn stronger_regularization_shrinks_weights() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(63, 0);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<bool> = x.iter().map(|r| r[0] + r[1] > 0.2).collect();
        let small_c = fit_logreg(&x, &y, 0.01, &grid()).unwrap();
        let large_c = fit_logreg(&x, &y, 10.0, &grid()).unwrap();
        let norm = |w: &[f64]| w.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm(&small_c.weights) <= norm(&large_c.weights) + 1e-8);
    }

    #[test]
    fn class_swap_negates_the_model() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(64, 0);
        let x: Vec<Vec<f64>> = (0..36)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<bool> = x.iter().map(|r| r[1] > 0.1).collect();
        let yn: Vec<bool> = y.iter().map(|v| !v).collect();
        let a = fit_logreg(&x, &y, 1.0, &grid()).unwrap();
        let b = fit_logreg(&x, &yn, 1.0, &grid()).unwrap();
        for (wa, wb) in a.weights.iter().zip(&b.weights) {
            assert!((wa + wb).abs() < 1e-6, "{wa} vs {wb}");
        }
        assert!((a.bias + b.bias).abs() < 1e-6);
    }

    #[test]
    fn standardized_variant_round_trips_decisions() {
        let x = vec![vec![100.0], vec![101.0], vec![109.0], vec![110.0]];
        let y = vec![false, false, true, true];
        let model = fit_logreg_standardized(&x, &y, 1.0, &grid()).unwrap();
        assert!(!model.predict(&x[0]));
        assert!(model.predict(&x[3]));
    }
}
