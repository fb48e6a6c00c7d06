//! Smooth warp curves: natural cubic splines through a handful of
//! equally spaced knots, plus the monotone time-warp map.

/// Natural cubic spline through `(xs, ys)`, evaluated at `x`.
///
/// Knot positions must be strictly increasing. Outside the knot range
/// the boundary polynomial is extended (never needed here: callers
/// place knots at the window ends).
pub fn cubic_spline_eval(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    debug_assert!(n >= 2 && ys.len() == n);
    if n == 2 {
        let t = (x - xs[0]) / (xs[1] - xs[0]);
        return ys[0] + t * (ys[1] - ys[0]);
    }

    // Second derivatives with natural boundary conditions (Thomas
    // algorithm on the interior tridiagonal system).
    let mut m = vec![0.0; n];
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let a = h0;
        let b = 2.0 * (h0 + h1);
        let c = h1;
        let d = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        if i == 1 {
            c_prime[i] = c / b;
            d_prime[i] = d / b;
        } else {
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }

    // Locate the segment.
    let k = match xs[1..n - 1].iter().position(|&kx| x < kx) {
        Some(p) => p,
        None => n - 2,
    };
    let h = xs[k + 1] - xs[k];
    let a = (xs[k + 1] - x) / h;
    let b = (x - xs[k]) / h;
    a * ys[k]
        + b * ys[k + 1]
        + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0
}

/// Sample a smooth multiplicative curve over `len` samples from knot
/// values (typically ~ Normal(1, sigma)) at equally spaced positions.
pub fn knot_curve(knots: &[f64], len: usize) -> Vec<f64> {
    let n = knots.len();
    let xs: Vec<f64> = (0..n)
        .map(|k| k as f64 * (len as f64 - 1.0) / (n as f64 - 1.0))
        .collect();
    (0..len)
        .map(|i| cubic_spline_eval(&xs, knots, i as f64))
        .collect()
}

/// Monotone time-warp source positions: a positive rate curve from the
/// knots is accumulated and normalized so position 0 maps to 0 and the
/// last sample maps to `len - 1`.
pub fn monotone_positions(knots: &[f64], len: usize) -> Vec<f64> {
    let rate = knot_curve(knots, len);
    let mut cum = vec![0.0; len];
    for i in 1..len {
        cum[i] = cum[i - 1] + rate[i].max(0.05);
    }
    let total = cum[len - 1];
    cum.iter().map(|c| c / total * (len as f64 - 1.0)).collect()
}

/// Linear interpolation of `x` at (possibly fractional) `pos`.
pub fn lerp_at(x: &[f64], pos: f64) -> f64 {
    let n = x.len();
    let p = pos.clamp(0.0, n as f64 - 1.0);
    let i = (p.floor() as usize).min(n - 2);
    let frac = p - i as f64;
    x[i] * (1.0 - frac) + x[i + 1] * frac
}
