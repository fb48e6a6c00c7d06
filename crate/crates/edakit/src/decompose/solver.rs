//! Operator-splitting (ADMM) solver for the decomposition program
//!
//! ```text
//! minimize   0.5*||M q + B l + C d - y||^2 + alpha*1'(A q) + (gamma/2)*||l||^2
//! subject to A q >= 0
//! ```
//!
//! in the auxiliary variable `q` (driver `p = A q`, phasic `r = M q`).
//! The nonnegativity constraint makes `||A q||_1` linear, so the
//! program is a QP. The x-update solves a fixed sparse system
//! `(P + sigma*I + rho*A'A)` once per `rho` via a banded Cholesky on
//! the `q` block and a dense Schur complement on the small spline/drift
//! tail, which keeps every iteration near-linear in the series length.

use super::banded::{BandedChol, DenseChol, SymBanded};
use super::basis::{drift_columns, spline_basis, Stencil};
use super::{CvxedaParams, DecomposeError};

pub(crate) struct Workspace {
    pub n: usize,
    pub nb: usize,
    ar: Stencil,
    ma: Stencil,
    b_cols: Vec<super::basis::SplineColumn>,
    drift: [Vec<f64>; 2],
    y: Vec<f64>,
    alpha: f64,
    gamma: f64,
    f_lin: Vec<f64>,
}

pub(crate) struct Solution {
    pub q: Vec<f64>,
    pub spline: Vec<f64>,
    pub drift: [f64; 2],
    /// Driver estimate: the splitting variable constrained to the
    /// nonnegative cone. Exactly `>= 0` and within the primal residual
    /// of `A q`; `z_i * multiplier_i == 0` holds exactly.
    pub z: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl Workspace {
    pub fn new(y: Vec<f64>, params: &CvxedaParams) -> Self {
        let n = y.len();
        let delta = 1.0 / crate::signal::RATE_HZ;
        let (ar, ma) = super::basis::bateman_stencils(params.tau0_s, params.tau1_s, delta);
        let knot_samples = (params.knot_spacing_s * crate::signal::RATE_HZ).round() as usize;
        let b_cols = spline_basis(n, knot_samples);
        let drift = drift_columns(n);
        let nb = b_cols.len();

        // Linear term: alpha on the driver column sums, minus F'y.
        let mut f_lin = vec![0.0; n + nb + 2];
        let colsums = ar.column_sums(n);
        let mut mty = vec![0.0; n];
        ma.apply_t(&y, &mut mty);
        for j in 0..n {
            f_lin[j] = params.alpha * colsums[j] - mty[j];
        }
        for (k, col) in b_cols.iter().enumerate() {
            f_lin[n + k] = -col.dot(&y);
        }
        for (k, col) in drift.iter().enumerate() {
            f_lin[n + nb + k] = -dot(col, &y);
        }

        Self {
            n,
            nb,
            ar,
            ma,
            b_cols,
            drift,
            y,
            alpha: params.alpha,
            gamma: params.gamma,
            f_lin,
        }
    }

    fn nv(&self) -> usize {
        self.n + self.nb + 2
    }

    /// r = M q + B l + C d.
    pub fn model(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut r = vec![0.0; n];
        self.ma.apply(&x[..n], &mut r);
        for (k, col) in self.b_cols.iter().enumerate() {
            col.axpy(x[n + k], &mut r);
        }
        for (k, col) in self.drift.iter().enumerate() {
            let coeff = x[n + self.nb + k];
            for i in 0..n {
                r[i] += coeff * col[i];
            }
        }
        r
    }

    /// out = F^T v stacked as [M'v; B'v; C'v].
    fn model_t(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        self.ma.apply_t(v, &mut out[..n]);
        for (k, col) in self.b_cols.iter().enumerate() {
            out[n + k] = col.dot(v);
        }
        for (k, col) in self.drift.iter().enumerate() {
            out[n + self.nb + k] = dot(col, v);
        }
    }

    /// out = P x = F^T F x + [0; gamma*l; 0].
    fn apply_p(&self, x: &[f64], out: &mut [f64]) {
        let r = self.model(x);
        self.model_t(&r, out);
        for k in 0..self.nb {
            out[self.n + k] += self.gamma * x[self.n + k];
        }
    }

    /// Objective of the original program at `x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let r = self.model(x);
        let resid: f64 = r
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let mut aq = vec![0.0; self.n];
        self.ar.apply(&x[..self.n], &mut aq);
        let l1: f64 = aq.iter().map(|v| v.abs()).sum();
        let ridge: f64 = x[self.n..self.n + self.nb].iter().map(|v| v * v).sum();
        0.5 * resid + self.alpha * l1 + 0.5 * self.gamma * ridge
    }

    pub fn phasic(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        self.ma.apply(&x[..self.n], &mut r);
        r
    }

    fn factor(&self, rho: f64, sigma: f64) -> Result<Factorization, DecomposeError> {
        let n = self.n;
        let m = self.nb + 2;

        // q-block: M'M + rho*A'A + sigma*I, bandwidth 2.
        let mut kqq = SymBanded::zeros(n, 2);
        self.ma.gram(n, |i, j, v| kqq.add(i, j, v));
        self.ar.gram(n, |i, j, v| kqq.add(i, j, v * rho));
        for j in 0..n {
            kqq.add(j, j, sigma);
        }
        let lqq = kqq
            .cholesky()
            .ok_or(DecomposeError::Factorization)?;

        // Cross block W = M' * [B C]  (n x m).
        let mut w = vec![0.0; n * m];
        let mut dense_col = vec![0.0; n];
        let mut mt_col = vec![0.0; n];
        for (k, col) in self.b_cols.iter().enumerate() {
            dense_col.iter_mut().for_each(|v| *v = 0.0);
            col.axpy(1.0, &mut dense_col);
            self.ma.apply_t(&dense_col, &mut mt_col);
            for i in 0..n {
                w[i * m + k] = mt_col[i];
            }
        }
        for (k, col) in self.drift.iter().enumerate() {
            self.ma.apply_t(col, &mut mt_col);
            for i in 0..n {
                w[i * m + self.nb + k] = mt_col[i];
            }
        }

        // Tail block: [B'B + gamma*I, B'C; C'B, C'C] + sigma*I.
        let mut tail = vec![0.0; m * m];
        let mut cols_dense: Vec<Vec<f64>> = Vec::with_capacity(m);
        for col in &self.b_cols {
            let mut d = vec![0.0; n];
            col.axpy(1.0, &mut d);
            cols_dense.push(d);
        }
        for col in &self.drift {
            cols_dense.push(col.clone());
        }
        for a in 0..m {
            for b in 0..=a {
                let v = dot(&cols_dense[a], &cols_dense[b]);
                tail[a * m + b] = v;
                tail[b * m + a] = v;
            }
        }
        for k in 0..self.nb {
            tail[k * m + k] += self.gamma;
        }
        for k in 0..m {
            tail[k * m + k] += sigma;
        }

        // V = Lqq^{-1} W, column by column; Schur S = tail - V'V.
        let mut v = w;
        let mut colbuf = vec![0.0; n];
        for k in 0..m {
            for i in 0..n {
                colbuf[i] = v[i * m + k];
            }
            lqq.forward(&mut colbuf);
            for i in 0..n {
                v[i * m + k] = colbuf[i];
            }
        }
        let mut schur = tail;
        for a in 0..m {
            for b in 0..=a {
                let mut s = 0.0;
                for i in 0..n {
                    s += v[i * m + a] * v[i * m + b];
                }
                schur[a * m + b] -= s;
                if a != b {
                    schur[b * m + a] -= s;
                }
            }
        }
        let ls = DenseChol::factor(&schur, m).ok_or(DecomposeError::Factorization)?;

        Ok(Factorization { n, m, lqq, v, ls })
    }

    /// Solve the program to the relative residual tolerance.
    pub fn solve(&self, params: &CvxedaParams) -> Result<Solution, DecomposeError> {
        let n = self.n;
        let nv = self.nv();
        let sigma = 1e-6;
        let mut rho = 0.1_f64;
        let mut fact = self.factor(rho, sigma)?;

        let mut x = vec![0.0; nv];
        let mut z = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut aq = vec![0.0; n];
        let mut rhs = vec![0.0; nv];
        let mut px = vec![0.0; nv];
        let mut at_buf = vec![0.0; n];
        let mut dual_vec = vec![0.0; nv];

        let tol = params.solver_tol;
        let check_every = 25;
        let mut iterations = 0;
        let mut pri_rel = f64::INFINITY;
        let mut dua_rel = f64::INFINITY;
        let mut converged = false;
        let mut atzu = vec![0.0; n];
        let mut at_u = vec![0.0; n];

        for iter in 0..params.max_iter {
            iterations = iter + 1;

            // x-update: (P + sigma I + rho A'A) x = sigma x - f + rho A'(z - u)
            for i in 0..n {
                at_buf[i] = z[i] - u[i];
            }
            self.ar.apply_t(&at_buf, &mut atzu);
            for j in 0..nv {
                rhs[j] = sigma * x[j] - self.f_lin[j];
            }
            for j in 0..n {
                rhs[j] += rho * atzu[j];
            }
            fact.solve(&mut rhs);
            x.copy_from_slice(&rhs);

            // z- and u-updates (exact projection keeps z'u == 0).
            self.ar.apply(&x[..n], &mut aq);
            for i in 0..n {
                let w = aq[i] + u[i];
                z[i] = w.max(0.0);
                u[i] = w - z[i];
            }

            if iter % check_every != check_every - 1 {
                continue;
            }

            // Residuals (relative, infinity norms).
            let mut pri = 0.0f64;
            let mut aq_norm = 0.0f64;
            let mut z_norm = 0.0f64;
            for i in 0..n {
                pri = pri.max((aq[i] - z[i]).abs());
                aq_norm = aq_norm.max(aq[i].abs());
                z_norm = z_norm.max(z[i].abs());
            }
            let spri = aq_norm.max(z_norm).max(1.0);

            self.apply_p(&x, &mut px);
            for i in 0..n {
                at_buf[i] = rho * u[i];
            }
            self.ar.apply_t(&at_buf, &mut at_u);
            let mut dua = 0.0f64;
            let mut px_norm = 0.0f64;
            let mut f_norm = 0.0f64;
            let mut atu_norm = 0.0f64;
            for j in 0..nv {
                let atl = if j < n { at_u[j] } else { 0.0 };
                dual_vec[j] = px[j] + self.f_lin[j] + atl;
                dua = dua.max(dual_vec[j].abs());
                px_norm = px_norm.max(px[j].abs());
                f_norm = f_norm.max(self.f_lin[j].abs());
                atu_norm = atu_norm.max(atl.abs());
            }
            let sdua = px_norm.max(f_norm).max(atu_norm).max(1.0);

            pri_rel = pri / spri;
            dua_rel = dua / sdua;

            if pri_rel <= tol && dua_rel <= tol {
                converged = true;
                break;
            }

            // OSQP-style rho adaptation with dual rescaling.
            if iter + 1 < params.max_iter {
                let ratio = (pri_rel / dua_rel.max(1e-300)).sqrt();
                let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                if new_rho > 5.0 * rho || new_rho < rho / 5.0 {
                    for ui in u.iter_mut() {
                        *ui *= rho / new_rho;
                    }
                    rho = new_rho;
                    fact = self.factor(rho, sigma)?;
                }
            }
        }

        if !converged {
            return Err(DecomposeError::SolverDidNotConverge {
                iterations,
                primal_residual: pri_rel,
                dual_residual: dua_rel,
            });
        }

        let multipliers: Vec<f64> = u.iter().map(|ui| -rho * ui).collect();
        Ok(Solution {
            q: x[..n].to_vec(),
            spline: x[n..n + self.nb].to_vec(),
            drift: [x[n + self.nb], x[n + self.nb + 1]],
            z,
            multipliers,
            iterations,
            primal_residual: pri_rel,
            dual_residual: dua_rel,
        })
    }
}

struct Factorization {
    n: usize,
    m: usize,
    lqq: BandedChol,
    v: Vec<f64>, // n x m, row-major: Lqq^{-1} W
    ls: DenseChol,
}

impl Factorization {
    /// Solve `K x = rhs` in place via block elimination.
    fn solve(&self, rhs: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        let mut w1 = rhs[..n].to_vec();
        self.lqq.forward(&mut w1);

        let mut rhs_t = rhs[n..n + m].to_vec();
        for k in 0..m {
            let mut s = 0.0;
            for i in 0..n {
                s += self.v[i * m + k] * w1[i];
            }
            rhs_t[k] -= s;
        }
        self.ls.solve(&mut rhs_t);

        for i in 0..n {
            let mut s = w1[i];
            for k in 0..m {
                s -= self.v[i * m + k] * rhs_t[k];
            }
            w1[i] = s;
        }
        self.lqq.backward(&mut w1);

        rhs[..n].copy_from_slice(&w1);
        rhs[n..n + m].copy_from_slice(&rhs_t);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
