//! Discretized bases for the decomposition program: the bi-exponential
//! (Bateman) ARMA stencils, the cubic tonic spline and the affine drift.

/// Three-tap stencil matrix: row `i >= 2` holds `c[0]` at `(i, i)`,
/// `c[1]` at `(i, i-1)`, `c[2]` at `(i, i-2)`; rows 0 and 1 are zero.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub c: [f64; 3],
}

impl Stencil {
    /// y = S x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        y[..2.min(n)].iter_mut().for_each(|v| *v = 0.0);
        for i in 2..n {
            y[i] = self.c[0] * x[i] + self.c[1] * x[i - 1] + self.c[2] * x[i - 2];
        }
    }

    /// y = S^T x.
    pub fn apply_t(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 2..n {
            y[i] += self.c[0] * x[i];
            y[i - 1] += self.c[1] * x[i];
            y[i - 2] += self.c[2] * x[i];
        }
    }

    /// Column sums `1^T S`.
    pub fn column_sums(&self, n: usize) -> Vec<f64> {
        let mut s = vec![0.0; n];
        for i in 2..n {
            s[i] += self.c[0];
            s[i - 1] += self.c[1];
            s[i - 2] += self.c[2];
        }
        s
    }

    /// Accumulate `S^T S` (bandwidth 2) into `add(i, j, v)` callbacks
    /// with `i >= j`.
    pub fn gram<F: FnMut(usize, usize, f64)>(&self, n: usize, mut add: F) {
        for i in 2..n {
            for a in 0..3 {
                for b in 0..3 {
                    let (ja, jb) = (i - a, i - b);
                    if ja >= jb {
                        add(ja, jb, self.c[a] * self.c[b]);
                    }
                }
            }
        }
    }

    /// Solve `S q = p` forward with `q[0] = q[1] = 0` (rows 0 and 1 of
    /// `S` are zero, so `p[0]` and `p[1]` are ignored).
    pub fn solve_forward(&self, p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let mut q = vec![0.0; n];
        for i in 2..n {
            q[i] = (p[i] - self.c[1] * q[i - 1] - self.c[2] * q[i - 2]) / self.c[0];
        }
        q
    }
}

/// ARMA discretization of the bi-exponential response
/// `h(t) = exp(-t/tau0) - exp(-t/tau1)` at sampling interval `delta`:
/// the response `r` to a driver `p` satisfies `A r = M_ma p` in
/// z-transform terms, which the program encodes as `r = M q`,
/// `p = A q` for an auxiliary variable `q`.
pub fn bateman_stencils(tau0: f64, tau1: f64, delta: f64) -> (Stencil, Stencil) {
    let a1 = 1.0 / tau0.min(tau1);
    let a0 = 1.0 / tau0.max(tau1);
    let den = (a1 - a0) * delta * delta;
    let ar = [
        ((a1 * delta + 2.0) * (a0 * delta + 2.0)) / den,
        (2.0 * a1 * a0 * delta * delta - 8.0) / den,
        ((a1 * delta - 2.0) * (a0 * delta - 2.0)) / den,
    ];
    let ma = [1.0, 2.0, 1.0];
    (Stencil { c: ar }, Stencil { c: ma })
}

/// A compactly supported spline column: values start at sample `start`.
#[derive(Debug, Clone)]
pub struct SplineColumn {
    pub start: usize,
    pub values: Vec<f64>,
}

impl SplineColumn {
    pub fn dot(&self, v: &[f64]) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, b)| b * v[self.start + k])
            .sum()
    }

    pub fn axpy(&self, coeff: f64, out: &mut [f64]) {
        for (k, b) in self.values.iter().enumerate() {
            out[self.start + k] += coeff * b;
        }
    }
}

/// Cubic-like tonic spline basis: the self-convolution of a triangular
/// kernel of half-width `knot_samples`, normalized to unit peak, with
/// one column centered on every `knot_samples`-th sample.
pub fn spline_basis(n: usize, knot_samples: usize) -> Vec<SplineColumn> {
    let dks = knot_samples.max(1);
    // Triangle 1..dks..1 convolved with itself.
    let tri: Vec<f64> = (1..dks)
        .map(|v| v as f64)
        .chain((1..=dks).rev().map(|v| v as f64))
        .collect();
    let m = tri.len();
    let mut spl = vec![0.0; 2 * m - 1];
    for (i, a) in tri.iter().enumerate() {
        for (j, b) in tri.iter().enumerate() {
            spl[i + j] += a * b;
        }
    }
    let peak = spl.iter().cloned().fold(f64::MIN, f64::max);
    for v in &mut spl {
        *v /= peak;
    }

    let half = spl.len() / 2;
    let mut cols = Vec::new();
    let mut center = 0usize;
    while center < n {
        let lo = center.saturating_sub(half);
        let hi = (center + half + 1).min(n);
        let values: Vec<f64> = (lo..hi).map(|i| spl[i + half - center]).collect();
        cols.push(SplineColumn { start: lo, values });
        center += dks;
    }
    cols
}

/// Affine drift columns: a constant and a normalized ramp.
pub fn drift_columns(n: usize) -> [Vec<f64>; 2] {
    let ones = vec![1.0; n];
    let ramp: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    [ones, ramp]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_transpose_consistent() {
        let s = Stencil { c: [3.0, -1.5, 0.25] };
        let n = 17;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut sx = vec![0.0; n];
        let mut sty = vec![0.0; n];
        s.apply(&x, &mut sx);
        s.apply_t(&y, &mut sty);
        let lhs: f64 = sx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&sty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn forward_solve_inverts_apply() {
        let (ar, _) = bateman_stencils(2.0, 0.7, 0.25);
        let n = 64;
        let mut p = vec![0.0; n];
        p[10] = 1.0;
        p[30] = -0.5;
        let q = ar.solve_forward(&p);
        let mut back = vec![0.0; n];
        ar.apply(&q, &mut back);
        for i in 2..n {
            assert!((back[i] - p[i]).abs() < 1e-9, "i={i}");
        }
    }

    #[test]
    fn bateman_impulse_response_is_nonnegative_pulse() {
        // Unit driver impulse -> response must look like the
        // bi-exponential: nonnegative, single interior peak.
        let (ar, ma) = bateman_stencils(2.0, 0.7, 0.25);
        let n = 200;
        let mut p = vec![0.0; n];
        p[10] = 1.0;
        let q = ar.solve_forward(&p);
        let mut r = vec![0.0; n];
        ma.apply(&q, &mut r);
        assert!(r.iter().all(|v| *v > -1e-9));
        let peak = r.iter().cloned().fold(f64::MIN, f64::max);
        assert!(peak > 0.0);
        let peak_idx = r.iter().position(|v| *v == peak).unwrap();
        assert!(peak_idx > 10 && peak_idx < 40, "peak at {peak_idx}");
        // Tail decays.
        assert!(r[n - 1] < 0.05 * peak);
    }

    #[test]
    fn spline_columns_cover_series_and_partition_smoothly() {
        let n = 240;
        let cols = spline_basis(n, 40);
        assert_eq!(cols.len(), 6);
        // Every sample is covered by at least one column.
        let mut cover = vec![0.0; n];
        for c in &cols {
            c.axpy(1.0, &mut cover);
        }
        assert!(cover.iter().all(|v| *v > 0.1));
    }
}
