//! Rank statistics across methods and experiments.
//!
//! The Friedman test ranks methods within each experiment (rank 1 =
//! highest score, average ranks on ties) and tests whether any method
//! differs. The post-hoc pairwise comparison uses the studentized-range
//! distribution with infinite degrees of freedom, evaluated directly by
//! quadrature; `q = |R_a - R_b| / sqrt(k (k+1) / (6 n))` enters the
//! distribution scaled by `sqrt(2)`, matching the reference
//! implementations of the Nemenyi-Friedman procedure.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use super::EvalError;

#[derive(Debug, Clone)]
pub struct FriedmanNemenyi {
    pub chi2: f64,
    pub p_value: f64,
    /// Mean rank per method (1 = best).
    pub mean_ranks: Vec<f64>,
    /// Symmetric pairwise p-value matrix (diagonal 1).
    pub pairwise_p: Vec<Vec<f64>>,
    /// Experiments dropped because of missing (NaN) cells.
    pub dropped_experiments: Vec<usize>,
    pub n_experiments: usize,
}

/// Friedman test plus pairwise post-hoc comparison.
///
/// `scores[m][e]` is the score of method `m` on experiment `e`; NaN
/// marks a missing cell and drops the whole experiment.
pub fn friedman_nemenyi(scores: &[Vec<f64>]) -> Result<FriedmanNemenyi, EvalError> {
    let k = scores.len();
    if k < 2 {
        return Err(EvalError::TooFewMethods(k));
    }
    if k > 20 {
        return Err(EvalError::TooManyMethods(k));
    }
    let n_all = scores[0].len();
    for (m, row) in scores.iter().enumerate() {
        if row.len() != n_all {
            return Err(EvalError::RaggedScores(m, row.len(), n_all));
        }
    }

    let mut dropped = Vec::new();
    let mut kept = Vec::new();
    for e in 0..n_all {
        if scores.iter().any(|row| row[e].is_nan()) {
            dropped.push(e);
        } else {
            kept.push(e);
        }
    }
    let n = kept.len();
    if n < 2 {
        return Err(EvalError::TooFewExperiments(n));
    }

    // Average ranks per experiment; rank 1 goes to the best score.
    let mut rank_sums = vec![0.0; k];
    for &e in &kept {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| scores[b][e].partial_cmp(&scores[a][e]).unwrap());
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && scores[order[j + 1]][e] == scores[order[i]][e] {
                j += 1;
            }
            // Positions i..=j share the averaged rank.
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &m in &order[i..=j] {
                rank_sums[m] += avg;
            }
            i = j + 1;
        }
    }
    let mean_ranks: Vec<f64> = rank_sums.iter().map(|s| s / n as f64).collect();

    let kf = k as f64;
    let nf = n as f64;
    let sum_r2: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * nf / (kf * (kf + 1.0)) * (sum_r2 - kf * (kf + 1.0) * (kf + 1.0) / 4.0);
    let chi2 = chi2.max(0.0);
    let dist = ChiSquared::new(kf - 1.0).expect("valid dof");
    let p_value = dist.sf(chi2);

    let scale = (kf * (kf + 1.0) / (6.0 * nf)).sqrt();
    let mut pairwise_p = vec![vec![1.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let q = (mean_ranks[a] - mean_ranks[b]).abs() / scale;
            let p = studentized_range_sf(q * std::f64::consts::SQRT_2, k);
            pairwise_p[a][b] = p;
            pairwise_p[b][a] = p;
        }
    }

    Ok(FriedmanNemenyi {
        chi2,
        p_value,
        mean_ranks,
        pairwise_p,
        dropped_experiments: dropped,
        n_experiments: n,
    })
}

/// Upper tail of the studentized range distribution with infinite
/// degrees of freedom:
///
/// ```text
/// P(Q > q) = 1 - k * Integral phi(z) * (Phi(z) - Phi(z - q))^(k-1) dz
/// ```
///
/// evaluated with composite Gauss-Legendre quadrature.
pub fn studentized_range_sf(q: f64, k: usize) -> f64 {
    if q <= 0.0 {
        return 1.0;
    }
    assert!(k >= 2, "range of at least two variates");
    let normal = Normal::new(0.0, 1.0).unwrap();

    // 16-point Gauss-Legendre nodes/weights on [-1, 1].
    const NODES: [f64; 8] = [
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.755404408355003,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const WEIGHTS: [f64; 8] = [
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];

    let (lo, hi) = (-8.5f64, 8.5 + q.min(50.0));
    let segments = 64;
    let mut cdf = 0.0;
    let seg_w = (hi - lo) / segments as f64;
    for s in 0..segments {
        let a = lo + s as f64 * seg_w;
        let mid = a + seg_w / 2.0;
        let half = seg_w / 2.0;
        for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
            for z in [mid - half * x, mid + half * x] {
                let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let inner = (normal.cdf(z) - normal.cdf(z - q)).max(0.0);
                cdf += w * half * phi * inner.powi(k as i32 - 1);
            }
        }
    }
    (1.0 - (k as f64) * cdf).clamp(0.0, 1.0)
}

/// Two-sided paired t-test with Bonferroni correction over `m`
/// comparisons.
pub fn paired_ttest_bonferroni(
    scores_a: &[f64],
    scores_b: &[f64],
    m: usize,
) -> Result<f64, EvalError> {
    if scores_a.len() != scores_b.len() {
        return Err(EvalError::LengthMismatch(scores_a.len(), scores_b.len()));
    }
    let n = scores_a.len();
    if n < 2 {
        return Err(EvalError::Empty("need at least 2 paired folds"));
    }
    if m == 0 {
        return Err(EvalError::Empty("comparison count"));
    }
    let diffs: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid dof");
    let p = 2.0 * dist.sf(t.abs());
    Ok((p * m as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rankings_give_closed_form_chi2() {
        // k = 3 methods, n = 5 experiments, same order everywhere.
        let scores = vec![
            vec![0.9, 0.8, 0.95, 0.7, 0.85],
            vec![0.6, 0.5, 0.65, 0.4, 0.55],
            vec![0.3, 0.2, 0.35, 0.1, 0.25],
        ];
        let out = friedman_nemenyi(&scores).unwrap();
        assert!((out.chi2 - 10.0).abs() < 1e-12);
        let want_p = (-5.0f64).exp();
        assert!((out.p_value - want_p).abs() < 1e-9, "p {}", out.p_value);
        assert_eq!(out.mean_ranks, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn identical_columns_have_pairwise_p_one() {
        let col = vec![0.7, 0.6, 0.8, 0.5];
        let scores = vec![col.clone(), col.clone(), vec![0.1, 0.2, 0.15, 0.05]];
        let out = friedman_nemenyi(&scores).unwrap();
        // Methods 0 and 1 tie everywhere: identical mean ranks, q = 0.
        assert!((out.mean_ranks[0] - out.mean_ranks[1]).abs() < 1e-12);
        assert_eq!(out.pairwise_p[0][1], 1.0);
    }

    #[test]
    fn permuting_experiments_changes_nothing() {
        let scores = vec![
            vec![0.9, 0.5, 0.7, 0.6],
            vec![0.8, 0.6, 0.5, 0.7],
            vec![0.1, 0.9, 0.6, 0.2],
        ];
        let perm: Vec<Vec<f64>> = scores
            .iter()
            .map(|row| vec![row[2], row[0], row[3], row[1]])
            .collect();
        let a = friedman_nemenyi(&scores).unwrap();
        let b = friedman_nemenyi(&perm).unwrap();
        assert_eq!(a.chi2, b.chi2);
        assert_eq!(a.mean_ranks, b.mean_ranks);
        assert_eq!(a.pairwise_p, b.pairwise_p);
    }

    #[test]
    fn missing_cells_drop_experiments() {
        let scores = vec![
            vec![0.9, f64::NAN, 0.7, 0.6],
            vec![0.8, 0.6, 0.5, 0.7],
        ];
        let out = friedman_nemenyi(&scores).unwrap();
        assert_eq!(out.dropped_experiments, vec![1]);
        assert_eq!(out.n_experiments, 3);
    }

    #[test]
    fn studentized_range_matches_published_quantiles() {
        // Known 5% critical values with infinite dof.
        for (k, q05) in [(2usize, 2.772), (3, 3.314), (4, 3.633), (10, 4.474)] {
            let sf = studentized_range_sf(q05, k);
            assert!(
                (sf - 0.05).abs() < 2e-3,
                "k={k}: sf({q05}) = {sf}, want ~0.05"
            );
        }
        // k = 2 closed form: P(Q <= q) = 2 Phi(q / sqrt(2)) - 1.
        let normal = Normal::new(0.0, 1.0).unwrap();
        for q in [0.5, 1.0, 2.0, 3.5] {
            let got = studentized_range_sf(q, 2);
            let want = 1.0 - (2.0 * normal.cdf(q / std::f64::consts::SQRT_2) - 1.0);
            assert!((got - want).abs() < 1e-9, "q={q}: {got} vs {want}");
        }
        assert_eq!(studentized_range_sf(0.0, 5), 1.0);
    }

    #[test]
    fn bonferroni_scales_and_clips() {
        let a = [0.7, 0.75, 0.72, 0.8, 0.69];
        let b = [0.6, 0.66, 0.71, 0.7, 0.62];
        let p1 = paired_ttest_bonferroni(&a, &b, 1).unwrap();
        let p5 = paired_ttest_bonferroni(&a, &b, 5).unwrap();
        assert!((p5 - (5.0 * p1).min(1.0)).abs() < 1e-12);
        let p_big = paired_ttest_bonferroni(&a, &b, 100_000).unwrap();
        assert_eq!(p_big, 1.0);
    }

    #[test]
    fn zero_variance_is_an_error_not_zero() {
        let a = [0.7, 0.7, 0.7];
        assert_eq!(
            paired_ttest_bonferroni(&a, &a, 1).unwrap_err(),
            EvalError::ZeroVariance
        );
        // Constant nonzero difference also has zero variance.
        let b = [0.6, 0.6, 0.6];
        assert_eq!(
            paired_ttest_bonferroni(&a, &b, 1).unwrap_err(),
            EvalError::ZeroVariance
        );
        let shifted = [0.8, 0.8, 0.8, 0.8];
        let base = [0.7, 0.7, 0.7, 0.7];
        let diffs_differ = [0.8, 0.75, 0.82, 0.7];
        assert!(paired_ttest_bonferroni(&diffs_differ, &base, 1).is_ok());
        assert_eq!(
            paired_ttest_bonferroni(&shifted, &base, 1).unwrap_err(),
            EvalError::ZeroVariance
        );
    }

    #[test]
    fn ties_get_average_ranks() {
        let scores = vec![
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            vec![0.1, 0.1],
        ];
        let out = friedman_nemenyi(&scores).unwrap();
        assert_eq!(out.mean_ranks, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn two_method_pairwise_agrees_with_friedman_chi2() {
        // For k = 2, both views reduce to the same normal deviate.
        let scores = vec![
            vec![0.9, 0.8, 0.7, 0.95, 0.85, 0.75],
            vec![0.6, 0.5, 0.4, 0.65, 0.55, 0.45],
        ];
        let out = friedman_nemenyi(&scores).unwrap();
        // chi2 = n when rankings are identical for k = 2.
        assert!((out.chi2 - 6.0).abs() < 1e-12);
        let p_chi = out.p_value;
        let p_pair = out.pairwise_p[0][1];
        assert!((p_chi - p_pair).abs() < 1e-6, "{p_chi} vs {p_pair}");
    }
}
