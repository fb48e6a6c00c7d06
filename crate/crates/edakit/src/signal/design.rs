//! Digital Butterworth design: analog prototype -> band transform ->
//! bilinear transform -> second-order sections.
//!
//! The cascade form keeps the very low normalized cutoffs used here
//! (down to 0.05 Hz at a 4 Hz rate) numerically well behaved; a single
//! high-order polynomial would not.

use rustfft::num_complex::Complex64;

use super::SignalError;

/// Filter band kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    Low,
    High,
    BandPass,
    BandStop,
}

impl BandKind {
    fn edge_count(self) -> usize {
        match self {
            BandKind::Low | BandKind::High => 1,
            BandKind::BandPass | BandKind::BandStop => 2,
        }
    }
}

/// One biquad section `(b0, b1, b2, a1, a2)` with `a0` normalized to 1.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

/// A cascade of second-order sections.
#[derive(Debug, Clone)]
pub struct Sos {
    sections: Vec<Biquad>,
    n_poles: usize,
}

impl Sos {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Number of poles of the digital filter (band kinds double the
    /// requested order).
    pub fn n_poles(&self) -> usize {
        self.n_poles
    }

    /// Magnitude response at `freq_hz` for sampling rate `fs`.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = std::f64::consts::TAU * freq_hz / fs;
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        let mut h = Complex64::new(1.0, 0.0);
        for s in &self.sections {
            let num = Complex64::new(s.b[0], 0.0) + z1 * s.b[1] + z2 * s.b[2];
            let den = Complex64::new(1.0, 0.0) + z1 * s.a[0] + z2 * s.a[1];
            h *= num / den;
        }
        h.norm()
    }

    /// Single forward pass (direct form II transposed) with the state
    /// initialized to the steady-state response of the first sample, so
    /// a constant input produces a constant output from sample 0.
    pub fn filter_with_steady_state(&self, x: &[f64]) -> Vec<f64> {
        let mut state: Vec<[f64; 2]> = Vec::with_capacity(self.sections.len());
        let mut level = match x.first() {
            Some(v) => *v,
            None => return Vec::new(),
        };
        for s in &self.sections {
            let a_sum = 1.0 + s.a[0] + s.a[1];
            let dc = (s.b[0] + s.b[1] + s.b[2]) / a_sum;
            let y = dc * level;
            let z0 = (s.b[1] + s.b[2]) * level - (s.a[0] + s.a[1]) * y;
            let z1 = s.b[2] * level - s.a[1] * y;
            state.push([z0, z1]);
            level = y;
        }

        let mut out = Vec::with_capacity(x.len());
        for &sample in x {
            let mut v = sample;
            for (s, z) in self.sections.iter().zip(state.iter_mut()) {
                let y = s.b[0] * v + z[0];
                z[0] = s.b[1] * v - s.a[0] * y + z[1];
                z[1] = s.b[2] * v - s.a[1] * y;
                v = y;
            }
            out.push(v);
        }
        out
    }
}

/// Design a digital Butterworth filter as an SOS cascade.
///
/// Edges are in Hz and must lie strictly inside `(0, fs/2)`; band kinds
/// require two strictly increasing edges.
pub fn design_butterworth(
    kind: BandKind,
    edges: &[f64],
    order: usize,
    fs: f64,
) -> Result<Sos, SignalError> {
    if order == 0 {
        return Err(SignalError::ZeroOrder);
    }
    if edges.len() != kind.edge_count() {
        return Err(SignalError::WrongEdgeCount {
            expected: kind.edge_count(),
            got: edges.len(),
        });
    }
    for &e in edges {
        if !(e > 0.0 && e < fs / 2.0) || !e.is_finite() {
            return Err(SignalError::CutoffOutOfRange(e));
        }
    }
    if edges.len() == 2 && edges[0] >= edges[1] {
        return Err(SignalError::EdgesNotIncreasing(edges[0], edges[1]));
    }

    // Analog Butterworth prototype: poles evenly spaced on the left
    // half unit circle, no zeros, unit gain.
    let mut poles: Vec<Complex64> = (0..order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect();
    let mut zeros: Vec<Complex64> = Vec::new();
    let mut gain = 1.0f64;

    // Prewarped analog edge frequencies.
    let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * f / fs).tan();

    match kind {
        BandKind::Low => {
            let wo = warp(edges[0]);
            for p in &mut poles {
                *p *= wo;
            }
            gain *= wo.powi(order as i32);
        }
        BandKind::High => {
            let wo = warp(edges[0]);
            let prod_neg_p: Complex64 = poles.iter().map(|p| -p).product();
            gain *= (1.0 / prod_neg_p).re;
            for p in &mut poles {
                *p = Complex64::new(wo, 0.0) / *p;
            }
            zeros = vec![Complex64::new(0.0, 0.0); order];
        }
        BandKind::BandPass => {
            let (w1, w2) = (warp(edges[0]), warp(edges[1]));
            let wo = (w1 * w2).sqrt();
            let bw = w2 - w1;
            let mut new_poles = Vec::with_capacity(2 * order);
            for p in &poles {
                let s = p * bw / 2.0;
                let d = (s * s - wo * wo).sqrt();
                new_poles.push(s + d);
                new_poles.push(s - d);
            }
            poles = new_poles;
            zeros = vec![Complex64::new(0.0, 0.0); order];
            gain *= bw.powi(order as i32);
        }
        BandKind::BandStop => {
            let (w1, w2) = (warp(edges[0]), warp(edges[1]));
            let wo = (w1 * w2).sqrt();
            let bw = w2 - w1;
            let prod_neg_p: Complex64 = poles.iter().map(|p| -p).product();
            gain *= (1.0 / prod_neg_p).re;
            let mut new_poles = Vec::with_capacity(2 * order);
            for p in &poles {
                let s = Complex64::new(bw / 2.0, 0.0) / p;
                let d = (s * s - wo * wo).sqrt();
                new_poles.push(s + d);
                new_poles.push(s - d);
            }
            poles = new_poles;
            zeros = Vec::with_capacity(2 * order);
            for _ in 0..order {
                zeros.push(Complex64::new(0.0, wo));
                zeros.push(Complex64::new(0.0, -wo));
            }
        }
    }

    // Bilinear transform to the z-domain.
    let fs2 = 2.0 * fs;
    let num: Complex64 = zeros.iter().map(|z| Complex64::new(fs2, 0.0) - z).product();
    let den: Complex64 = poles.iter().map(|p| Complex64::new(fs2, 0.0) - p).product();
    gain *= (num / den).re;
    let degree = poles.len() - zeros.len();
    let mut zd: Vec<Complex64> = zeros
        .iter()
        .map(|z| (Complex64::new(fs2, 0.0) + z) / (Complex64::new(fs2, 0.0) - z))
        .collect();
    let pd: Vec<Complex64> = poles
        .iter()
        .map(|p| (Complex64::new(fs2, 0.0) + p) / (Complex64::new(fs2, 0.0) - p))
        .collect();
    zd.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), degree));

    Ok(zpk_to_sos(&zd, &pd, gain))
}

/// Split a conjugate-symmetric root set into conjugate pairs and reals.
fn split_roots(roots: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut pairs = Vec::new();
    let mut reals = Vec::new();
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        if roots[i].im.abs() < 1e-12 {
            reals.push(Complex64::new(roots[i].re, 0.0));
            used[i] = true;
            continue;
        }
        // Find the closest conjugate partner.
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (j, r) in roots.iter().enumerate().skip(i + 1) {
            if used[j] {
                continue;
            }
            let d = (r - roots[i].conj()).norm();
            if d < best_d {
                best_d = d;
                best = Some(j);
            }
        }
        let j = best.expect("conjugate-symmetric root set");
        used[i] = true;
        used[j] = true;
        pairs.push(roots[i]);
    }
    (pairs, reals)
}

/// Pair poles with nearby zeros into biquad sections.
fn zpk_to_sos(zeros: &[Complex64], poles: &[Complex64], gain: f64) -> Sos {
    let n_poles = poles.len();
    let (mut pole_pairs, mut pole_reals) = split_roots(poles);
    let (mut zero_pairs, mut zero_reals) = split_roots(zeros);

    // Work on poles farthest from the unit circle first; the final
    // sections then hold the most resonant poles, which keeps the
    // intermediate signals bounded.
    pole_pairs.sort_by(|a, b| {
        let da = (a.norm() - 1.0).abs();
        let db = (b.norm() - 1.0).abs();
        db.partial_cmp(&da).unwrap()
    });
    pole_reals.sort_by(|a, b| {
        let da = (a.norm() - 1.0).abs();
        let db = (b.norm() - 1.0).abs();
        db.partial_cmp(&da).unwrap()
    });

    let mut sections: Vec<Biquad> = Vec::new();

    let take_nearest = |pool: &mut Vec<Complex64>, to: Complex64| -> Option<Complex64> {
        if pool.is_empty() {
            return None;
        }
        let mut bi = 0;
        let mut bd = f64::INFINITY;
        for (i, z) in pool.iter().enumerate() {
            let d = (z - to).norm();
            if d < bd {
                bd = d;
                bi = i;
            }
        }
        Some(pool.swap_remove(bi))
    };

    for p in pole_pairs {
        // Denominator from the conjugate pole pair.
        let a1 = -2.0 * p.re;
        let a2 = p.norm_sqr();
        // Numerator from the nearest zero pair, else the nearest two
        // real zeros, else trivial.
        let b = if let Some(z) = take_nearest(&mut zero_pairs, p) {
            [1.0, -2.0 * z.re, z.norm_sqr()]
        } else {
            let z1 = take_nearest(&mut zero_reals, p);
            let z2 = take_nearest(&mut zero_reals, p);
            match (z1, z2) {
                (Some(u), Some(v)) => [1.0, -(u.re + v.re), u.re * v.re],
                (Some(u), None) => [1.0, -u.re, 0.0],
                _ => [1.0, 0.0, 0.0],
            }
        };
        sections.push(Biquad { b, a: [a1, a2] });
    }

    // Remaining real poles: combine them two at a time.
    while let Some(p1) = pole_reals.pop() {
        let p2 = pole_reals.pop();
        let (a1, a2) = match p2 {
            Some(q) => (-(p1.re + q.re), p1.re * q.re),
            None => (-p1.re, 0.0),
        };
        let z1 = take_nearest(&mut zero_reals, p1);
        let z2 = take_nearest(&mut zero_reals, p1);
        let b = match (z1, z2) {
            (Some(u), Some(v)) => [1.0, -(u.re + v.re), u.re * v.re],
            (Some(u), None) => [1.0, -u.re, 0.0],
            _ => [1.0, 0.0, 0.0],
        };
        sections.push(Biquad { b, a: [a1, a2] });
    }
    debug_assert!(zero_pairs.is_empty() && zero_reals.is_empty());

    if sections.is_empty() {
        sections.push(Biquad {
            b: [1.0, 0.0, 0.0],
            a: [0.0, 0.0],
        });
    }
    // Fold the overall gain into the first section.
    for c in sections[0].b.iter_mut() {
        *c *= gain;
    }

    Sos { sections, n_poles }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::RATE_HZ;

    /// Analytic Butterworth magnitude on the prewarped frequency axis.
    ///
    /// The bilinear transform maps the analog response exactly onto the
    /// prewarped axis, so this closed form is an oracle for the whole
    /// design pipeline without touching poles, zeros or sections.
    fn analytic_magnitude(kind: BandKind, edges: &[f64], order: usize, f: f64) -> f64 {
        let fs = RATE_HZ;
        let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * f / fs).tan();
        let w = warp(f);
        let omega = match kind {
            BandKind::Low => w / warp(edges[0]),
            BandKind::High => warp(edges[0]) / w,
            BandKind::BandPass | BandKind::BandStop => {
                let (w1, w2) = (warp(edges[0]), warp(edges[1]));
                let wo2 = w1 * w2;
                let bw = w2 - w1;
                if kind == BandKind::BandPass {
                    (w * w - wo2) / (bw * w)
                } else {
                    (bw * w) / (w * w - wo2)
                }
            }
        };
        (1.0 / (1.0 + omega.powi(2 * order as i32))).sqrt()
    }

    #[test]
    fn lowpass_matches_analytic_magnitude() {
        let sos = design_butterworth(BandKind::Low, &[0.4], 4, RATE_HZ).unwrap();
        for f in [0.05, 0.1, 0.2, 0.4, 0.8, 1.0, 1.5, 1.9] {
            let got = sos.magnitude(f, RATE_HZ);
            let want = analytic_magnitude(BandKind::Low, &[0.4], 4, f);
            assert!(
                (got - want).abs() <= 1e-9 * want.max(1e-12) + 1e-12,
                "f={f}: got {got}, want {want}"
            );
        }
        // Half-power point at the cutoff.
        let at_cut = sos.magnitude(0.4, RATE_HZ);
        assert!((at_cut - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn band_kinds_match_analytic_magnitude() {
        for (kind, edges) in [
            (BandKind::BandPass, [0.05, 0.25]),
            (BandKind::BandStop, [0.75, 1.0]),
        ] {
            let sos = design_butterworth(kind, &edges, 4, RATE_HZ).unwrap();
            for f in [0.02, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0, 1.5] {
                let got = sos.magnitude(f, RATE_HZ);
                let want = analytic_magnitude(kind, &edges, 4, f);
                assert!(
                    (got - want).abs() <= 1e-8 * want.max(1.0),
                    "{kind:?} f={f}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn highpass_unit_gain_at_nyquist() {
        let sos = design_butterworth(BandKind::High, &[0.25], 4, RATE_HZ).unwrap();
        let g = sos.magnitude(2.0, RATE_HZ);
        assert!((g - 1.0).abs() < 1e-9, "Nyquist gain {g}");
        assert!(sos.magnitude(0.0, RATE_HZ) < 1e-12);
    }

    #[test]
    fn odd_order_designs_work() {
        for order in [1usize, 3, 5] {
            let sos = design_butterworth(BandKind::Low, &[0.4], order, RATE_HZ).unwrap();
            assert_eq!(sos.n_poles(), order);
            let dc = sos.magnitude(0.0, RATE_HZ);
            assert!((dc - 1.0).abs() < 1e-9, "order {order} DC gain {dc}");
        }
    }

    #[test]
    fn band_kinds_double_pole_count() {
        let sos = design_butterworth(BandKind::BandPass, &[0.05, 0.25], 4, RATE_HZ).unwrap();
        assert_eq!(sos.n_poles(), 8);
    }
}
