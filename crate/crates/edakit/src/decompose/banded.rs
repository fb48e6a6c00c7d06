//! Symmetric banded matrices with Cholesky factorization.
//!
//! Band storage: `bands[k][j]` holds element `(j + k, j)`, i.e. the
//! k-th subdiagonal. Only the lower triangle is stored.

#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    bands: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth).map(|k| vec![0.0; n - k.min(n)]).collect();
        Self { n, bands }
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// Add `v` to element `(i, j)` with `i >= j`, `i - j <= bandwidth`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i >= j && i - j < self.bands.len());
        self.bands[i - j][j] += v;
    }

    /// y = S x (full symmetric product). Used by the factorization
    /// tests.
    #[cfg(test)]
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let bw = self.bandwidth();
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            y[j] += self.bands[0][j] * x[j];
            for k in 1..=bw.min(self.n - 1 - j) {
                let a = self.bands[k][j];
                y[j + k] += a * x[j];
                y[j] += a * x[j + k];
            }
        }
    }

    /// Lower banded Cholesky factor, same bandwidth.
    pub fn cholesky(&self) -> Option<BandedChol> {
        let n = self.n;
        let bw = self.bandwidth();
        let mut l: Vec<Vec<f64>> = self.bands.clone();
        for j in 0..n {
            let start = j.saturating_sub(bw);
            let mut d = l[0][j];
            for k in start..j {
                let v = l[j - k][k];
                d -= v * v;
            }
            if d <= 0.0 {
                return None;
            }
            let dj = d.sqrt();
            l[0][j] = dj;
            let imax = (j + bw).min(n - 1);
            for i in j + 1..=imax {
                let mut s = l[i - j][j];
                let kstart = i.saturating_sub(bw).max(start);
                for k in kstart..j {
                    s -= l[i - k][k] * l[j - k][k];
                }
                l[i - j][j] = s / dj;
            }
        }
        Some(BandedChol { n, bands: l })
    }
}

/// Lower banded Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct BandedChol {
    n: usize,
    bands: Vec<Vec<f64>>,
}

impl BandedChol {
    /// Solve `L w = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        let bw = self.bands.len() - 1;
        for i in 0..self.n {
            let start = i.saturating_sub(bw);
            let mut s = b[i];
            for k in start..i {
                s -= self.bands[i - k][k] * b[k];
            }
            b[i] = s / self.bands[0][i];
        }
    }

    /// Solve `L^T x = b` in place.
    pub fn backward(&self, b: &mut [f64]) {
        let bw = self.bands.len() - 1;
        for i in (0..self.n).rev() {
            let mut s = b[i];
            let kmax = (i + bw).min(self.n - 1);
            for k in i + 1..=kmax {
                s -= self.bands[k - i][i] * b[k];
            }
            b[i] = s / self.bands[0][i];
        }
    }
}

/// Minimal dense symmetric positive-definite solver for the small
/// Schur-complement tail block.
#[derive(Debug, Clone)]
pub struct DenseChol {
    n: usize,
    l: Vec<f64>, // row-major lower triangle
}

impl DenseChol {
    /// Factor a dense symmetric matrix given in row-major order.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 {
                return None;
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Some(Self { n, l })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}
