//! Contrastive loss over paired views.
//!
//! For `2N` embeddings with a perfect matching `pairing` (view `i` of
//! an anchor is paired with view `pairing[i]`), the per-anchor loss is
//!
//! ```text
//! L_i = -log( exp(sim(z_i, z_p(i)) / tau) / sum_{k != i} exp(sim(z_i, z_k) / tau) )
//! ```
//!
//! with cosine similarity, averaged over all `2N` anchors. The positive
//! term appears in the denominator, so the loss is nonnegative, and a
//! batch of one pair is exactly zero. Negatives are all other in-batch
//! views.

use num_traits::Float;

use super::TrainError;
use crate::encoder::tensor::{c, Tensor2};

fn check_pairing(pairing: &[usize], n: usize) -> Result<(), TrainError> {
    if pairing.len() != n {
        return Err(TrainError::BadPairing(format!(
            "pairing length {} != {} embeddings",
            pairing.len(),
            n
        )));
    }
    for (i, &j) in pairing.iter().enumerate() {
        if j >= n || j == i || pairing[j] != i {
            return Err(TrainError::BadPairing(format!(
                "pairing is not a perfect matching at {i} -> {j}"
            )));
        }
    }
    Ok(())
}

/// Row-normalized copies of the embeddings.
fn normalize<T: Float>(emb: &Tensor2<T>) -> Result<(Tensor2<T>, Vec<T>), TrainError> {
    let mut unit = emb.clone();
    let mut norms = Vec::with_capacity(emb.r);
    for ri in 0..emb.r {
        let row = unit.row_mut(ri);
        let mut sq = T::zero();
        for v in row.iter() {
            if !v.is_finite() {
                return Err(TrainError::NonFinite(format!("embedding row {ri}")));
            }
            sq = sq + *v * *v;
        }
        let norm = sq.sqrt();
        if norm <= T::zero() {
            return Err(TrainError::ZeroVector(ri));
        }
        for v in row.iter_mut() {
            *v = *v / norm;
        }
        norms.push(norm);
    }
    Ok((unit, norms))
}

/// Mean contrastive loss (no gradients).
pub fn info_nce<T: Float>(
    emb: &Tensor2<T>,
    pairing: &[usize],
    tau: f64,
) -> Result<T, TrainError> {
    Ok(info_nce_impl(emb, pairing, tau, false)?.0)
}

/// Mean contrastive loss and its gradient w.r.t. the raw embeddings.
pub fn info_nce_with_grad<T: Float>(
    emb: &Tensor2<T>,
    pairing: &[usize],
    tau: f64,
) -> Result<(T, Tensor2<T>), TrainError> {
    let (loss, grad) = info_nce_impl(emb, pairing, tau, true)?;
    Ok((loss, grad.expect("gradient requested")))
}

fn info_nce_impl<T: Float>(
    emb: &Tensor2<T>,
    pairing: &[usize],
    tau: f64,
    want_grad: bool,
) -> Result<(T, Option<Tensor2<T>>), TrainError> {
    let n = emb.r;
    if n < 2 || !n.is_multiple_of(2) {
        return Err(TrainError::BadPairing(format!(
            "need an even batch of >= 2 embeddings, got {n}"
        )));
    }
    if tau <= 0.0 {
        return Err(TrainError::BadConfig("temperature must be positive".into()));
    }
    check_pairing(pairing, n)?;

    let (unit, norms) = normalize(emb)?;
    let inv_tau = c::<T>(1.0 / tau);
    let d = emb.c;

    // Cosine similarity matrix (only needed row-wise).
    let sim = |i: usize, k: usize| -> T {
        let (a, b) = (unit.row(i), unit.row(k));
        let mut s = T::zero();
        for t in 0..d {
            s = s + a[t] * b[t];
        }
        s
    };

    let mut total = T::zero();
    // g_unit[i] accumulates dL/d(unit_i).
    let mut g_unit = want_grad.then(|| Tensor2::<T>::zeros(n, d));
    let inv_count = c::<T>(1.0 / n as f64);

    let mut logits = vec![T::zero(); n];
    for i in 0..n {
        let mut max = T::neg_infinity();
        for k in 0..n {
            if k == i {
                continue;
            }
            let s = sim(i, k) * inv_tau;
            logits[k] = s;
            if s > max {
                max = s;
            }
        }
        let mut z = T::zero();
        for k in 0..n {
            if k != i {
                z = z + (logits[k] - max).exp();
            }
        }
        let lse = max + z.ln();
        let pos = logits[pairing[i]];
        total = total + (lse - pos);

        if let Some(g) = g_unit.as_mut() {
            // dL_i/ds_ik = softmax_k - 1[k = p(i)], scaled by 1/(tau*n).
            for k in 0..n {
                if k == i {
                    continue;
                }
                let mut w = ((logits[k] - max).exp() / z) * inv_tau * inv_count;
                if k == pairing[i] {
                    w = w - inv_tau * inv_count;
                }
                // s_ik = unit_i . unit_k contributes to both rows.
                for t in 0..d {
                    let (ui, uk) = (unit.row(i)[t], unit.row(k)[t]);
                    g.row_mut(i)[t] = g.row(i)[t] + w * uk;
                    g.row_mut(k)[t] = g.row(k)[t] + w * ui;
                }
            }
        }
    }
    let loss = total * inv_count;

    let grad = g_unit.map(|g| {
        // Back through the row normalization:
        // dL/dz = (g - (g . u) u) / ||z||.
        let mut out = Tensor2::<T>::zeros(n, d);
        for i in 0..n {
            let u = unit.row(i);
            let gi = g.row(i);
            let mut dot = T::zero();
            for t in 0..d {
                dot = dot + gi[t] * u[t];
            }
            let inv_norm = T::one() / norms[i];
            for t in 0..d {
                out.row_mut(i)[t] = (gi[t] - dot * u[t]) * inv_norm;
            }
        }
        out
    });

    Ok((loss, grad))
}

/// The standard two-view pairing: `i <-> i + N`.
pub fn two_view_pairing(pairs: usize) -> Vec<usize> {
    (0..2 * pairs)
        .map(|i| if i < pairs { i + pairs } else { i - pairs })
        .collect()
}
