//! Independent oracles for the acceptance suite.
//!
//! The QP oracle is a dense Mehrotra-style primal-dual interior-point
//! method with its own row-pivoted LU solver; it shares nothing with
//! the library's operator-splitting path except the problem statement.

/// Dense row-major matrix helpers.
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, a: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.cols + c] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            let mut s = 0.0;
            for (a, b) in row.iter().zip(x) {
                s += a * b;
            }
            y[r] = s;
        }
        y
    }

    pub fn tmatvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.a[r * self.cols..(r + 1) * self.cols];
            for (c, a) in row.iter().enumerate() {
                y[c] += a * x[r];
            }
        }
        y
    }
}

/// LU with partial pivoting; solves in place.
fn lu_solve(mut m: Dense, mut b: Vec<f64>) -> Vec<f64> {
    let n = m.rows;
    assert_eq!(m.cols, n);
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // Pivot.
        let mut p = k;
        let mut best = m.at(k, k).abs();
        for r in k + 1..n {
            let v = m.at(r, k).abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        assert!(best > 0.0, "singular system in oracle");
        if p != k {
            for c in 0..n {
                let (x, y) = (m.at(k, c), m.at(p, c));
                m.set(k, c, y);
                m.set(p, c, x);
            }
            perm.swap(k, p);
            b.swap(k, p);
        }
        let pivot = m.at(k, k);
        for r in k + 1..n {
            let f = m.at(r, k) / pivot;
            if f == 0.0 {
                continue;
            }
            m.set(r, k, f);
            for c in k + 1..n {
                let v = m.at(r, c) - f * m.at(k, c);
                m.set(r, c, v);
            }
            b[r] -= f * b[k];
        }
    }
    // Back substitution.
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= m.at(r, c) * b[c];
        }
        b[r] = s / m.at(r, r);
    }
    b
}

/// Solve `min 0.5 x'Px + f'x  s.t.  Gx <= h` by a primal-dual
/// interior-point method with Mehrotra predictor-corrector steps.
/// Returns the primal solution.
pub fn solve_qp_ipm(p: &Dense, f: &[f64], g: &Dense, h: &[f64]) -> Vec<f64> {
    let n = f.len();
    let m = h.len();
    assert_eq!((p.rows, p.cols), (n, n));
    assert_eq!((g.rows, g.cols), (m, n));

    let mut x = vec![0.0; n];
    let mut s = vec![1.0; m];
    let mut lam = vec![1.0; m];

    for _iter in 0..200 {
        let gx = g.matvec(&x);
        let px = p.matvec(&x);
        let gt_lam = g.tmatvec(&lam);
        let r_d: Vec<f64> = (0..n).map(|i| px[i] + f[i] + gt_lam[i]).collect();
        let r_p: Vec<f64> = (0..m).map(|i| gx[i] + s[i] - h[i]).collect();
        let mu = s.iter().zip(&lam).map(|(a, b)| a * b).sum::<f64>() / m as f64;

        let scale = 1.0 + f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let rd_inf = r_d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let rp_inf = r_p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if mu < 1e-12 && rd_inf < 1e-9 * scale && rp_inf < 1e-10 {
            break;
        }

        // Newton matrix: P + G' diag(lam/s) G (+ tiny regularization).
        let mut kkt = Dense::zeros(n, n);
        kkt.a.copy_from_slice(&p.a);
        for i in 0..n {
            let v = kkt.at(i, i) + 1e-11;
            kkt.set(i, i, v);
        }
        for r in 0..m {
            let d = lam[r] / s[r];
            for i in 0..n {
                let gi = g.at(r, i);
                if gi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = kkt.at(i, j) + d * gi * g.at(r, j);
                    kkt.set(i, j, v);
                }
            }
        }

        let solve_dir = |kkt_a: &Dense, r_cc: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            // rhs = -r_d - G'[ (lam/s) o r_p - r_cc / s ]
            let mut w = vec![0.0; m];
            for i in 0..m {
                w[i] = lam[i] / s[i] * r_p[i] - r_cc[i] / s[i];
            }
            let gtw = g.tmatvec(&w);
            let rhs: Vec<f64> = (0..n).map(|i| -r_d[i] - gtw[i]).collect();
            let kcopy = Dense { rows: n, cols: n, a: kkt_a.a.clone() };
            let dx = lu_solve(kcopy, rhs);
            let gdx = g.matvec(&dx);
            let mut dlam = vec![0.0; m];
            let mut ds = vec![0.0; m];
            for i in 0..m {
                dlam[i] = lam[i] / s[i] * (gdx[i] + r_p[i]) - r_cc[i] / s[i];
                ds[i] = -r_p[i] - gdx[i];
            }
            (dx, ds, dlam)
        };

        let step_len = |v: &[f64], dv: &[f64]| -> f64 {
            let mut a = 1.0f64;
            for (vi, di) in v.iter().zip(dv) {
                if *di < 0.0 {
                    a = a.min(-vi / di);
                }
            }
            a
        };

        // Affine (predictor) direction.
        let r_cc_aff: Vec<f64> = (0..m).map(|i| s[i] * lam[i]).collect();
        let (_dx_a, ds_a, dlam_a) = solve_dir(&kkt, &r_cc_aff);
        let alpha_s = step_len(&s, &ds_a).min(1.0);
        let alpha_l = step_len(&lam, &dlam_a).min(1.0);
        let mu_aff = (0..m)
            .map(|i| (s[i] + alpha_s * ds_a[i]) * (lam[i] + alpha_l * dlam_a[i]))
            .sum::<f64>()
            / m as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 1.0);

        // Corrected direction.
        let r_cc: Vec<f64> = (0..m)
            .map(|i| s[i] * lam[i] + ds_a[i] * dlam_a[i] - sigma * mu)
            .collect();
        let (dx, ds, dlam) = solve_dir(&kkt, &r_cc);
        let alpha = 0.99
            * step_len(&s, &ds)
                .min(step_len(&lam, &dlam))
                .min(1.0 / 0.99);
        for i in 0..n {
            x[i] += alpha * dx[i];
        }
        for i in 0..m {
            s[i] += alpha * ds[i];
            lam[i] += alpha * dlam[i];
        }
    }
    x
}

/// Naive statistics + O(N^2) DFT reimplementation of the 15 base
/// features, in the library's layout order.
pub fn naive_channel_features(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let mut min = f64::MAX;
    let mut max = f64::MIN;
    for v in x {
        min = min.min(*v);
        max = max.max(*v);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    let std = var.sqrt();
    let slope = (x[n - 1] - x[0]) / (nf - 1.0);
    let diffs: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let dmean = diffs.iter().sum::<f64>() / (nf - 1.0);
    let dvar = diffs.iter().map(|d| (d - dmean) * (d - dmean)).sum::<f64>() / (nf - 2.0);
    let mut peaks = 0usize;
    let mut peak_sum = 0.0;
    for i in 1..n - 1 {
        if x[i - 1] < x[i] && x[i] > x[i + 1] {
            peaks += 1;
            peak_sum += x[i];
        }
    }
    let peak_amp = if peaks > 0 { peak_sum / peaks as f64 } else { 0.0 };

    // Quadratic-time DFT with the library's documented zero floor.
    let max_abs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = nf * f64::EPSILON * max_abs;
    let dc: f64 = x.iter().sum();
    let mut abs_sum = 0.0;
    let mut energy = 0.0;
    let mut powers = Vec::with_capacity(n - 1);
    for k in 1..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in x.iter().enumerate() {
            let ang = -2.0 * std::f64::consts::PI * (k * t) as f64 / nf;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        let mag = (re * re + im * im).sqrt();
        let mag = if mag <= floor { 0.0 } else { mag };
        abs_sum += mag;
        energy += mag * mag;
        powers.push(mag * mag);
    }
    let entropy = if energy > 0.0 {
        -powers
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| (p / energy) * (p / energy).log2())
            .sum::<f64>()
    } else {
        0.0
    };

    vec![
        mean, min, max, std, max - min, slope, slope.abs(), dmean, dvar.sqrt(),
        peaks as f64, peak_amp, dc, abs_sum, entropy, energy,
    ]
}
