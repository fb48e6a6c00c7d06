//! Network layers with explicit reverse-mode gradients.
//!
//! Each layer caches what its backward pass needs during `forward`;
//! `backward` consumes the cache and accumulates parameter gradients.
//! Calling `backward` without a recorded forward is a caller bug and
//! panics (the encoder guards it with a `NoTape` error first).

use num_traits::Float;
use rand::Rng;

use super::tensor::{c, kaiming_uniform, Param, Tensor2, Tensor3};

#[inline]
fn sigmoid<T: Float>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// 1D convolution, optionally grouped, no dilation.
#[derive(Debug, Clone)]
pub struct Conv1d<T> {
    pub w: Param<T>, // [out_ch, in_ch/groups, k]
    pub bias: Option<Param<T>>,
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub groups: usize,
    cache_x: Option<Tensor3<T>>,
}

impl<T: Float> Conv1d<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        in_ch: usize,
        out_ch: usize,
        k: usize,
        stride: usize,
        pad: usize,
        groups: usize,
        with_bias: bool,
        rng: &mut R,
    ) -> Self {
        assert!(in_ch.is_multiple_of(groups) && out_ch.is_multiple_of(groups));
        let icg = in_ch / groups;
        let w = kaiming_uniform(&[out_ch, icg, k], icg * k, rng);
        let bias = with_bias.then(|| Param::zeros(&[out_ch]));
        Self { w, bias, in_ch, out_ch, k, stride, pad, groups, cache_x: None }
    }

    pub fn out_len(&self, l: usize) -> usize {
        (l + 2 * self.pad - self.k) / self.stride + 1
    }

    pub fn forward(&mut self, x: &Tensor3<T>, record: bool) -> Tensor3<T> {
        assert_eq!(x.c, self.in_ch, "conv input channels");
        let ol = self.out_len(x.l);
        let icg = self.in_ch / self.groups;
        let ocg = self.out_ch / self.groups;
        let mut y = Tensor3::zeros(x.b, self.out_ch, ol);

        for bi in 0..x.b {
            for oc in 0..self.out_ch {
                let g = oc / ocg;
                let bias = self.bias.as_ref().map_or(T::zero(), |b| b.data[oc]);
                for li in 0..ol {
                    let mut acc = bias;
                    let base = li * self.stride;
                    for icg_i in 0..icg {
                        let xrow = x.row(bi, g * icg + icg_i);
                        let wrow = &self.w.data[(oc * icg + icg_i) * self.k..];
                        for kk in 0..self.k {
                            let il = base + kk;
                            if il >= self.pad && il - self.pad < x.l {
                                acc = acc + wrow[kk] * xrow[il - self.pad];
                            }
                        }
                    }
                    y.row_mut(bi, oc)[li] = acc;
                }
            }
        }
        if record {
            self.cache_x = Some(x.clone());
        }
        y
    }

    pub fn backward(&mut self, gy: &Tensor3<T>) -> Tensor3<T> {
        let x = self.cache_x.take().expect("conv backward without forward");
        let icg = self.in_ch / self.groups;
        let ocg = self.out_ch / self.groups;
        let mut gx = Tensor3::zeros(x.b, x.c, x.l);

        for bi in 0..x.b {
            for oc in 0..self.out_ch {
                let g = oc / ocg;
                let gyrow = gy.row(bi, oc);
                if let Some(b) = self.bias.as_mut() {
                    let mut s = T::zero();
                    for v in gyrow {
                        s = s + *v;
                    }
                    b.grad[oc] = b.grad[oc] + s;
                }
                for icg_i in 0..icg {
                    let ic = g * icg + icg_i;
                    let xrow = x.row(bi, ic);
                    let wbase = (oc * icg + icg_i) * self.k;
                    for li in 0..gy.l {
                        let gv = gyrow[li];
                        if gv == T::zero() {
                            continue;
                        }
                        let base = li * self.stride;
                        for kk in 0..self.k {
                            let il = base + kk;
                            if il >= self.pad && il - self.pad < x.l {
                                self.w.grad[wbase + kk] =
                                    self.w.grad[wbase + kk] + gv * xrow[il - self.pad];
                                let gxrow = gx.row_mut(bi, ic);
                                gxrow[il - self.pad] =
                                    gxrow[il - self.pad] + self.w.data[wbase + kk] * gv;
                            }
                        }
                    }
                }
            }
        }
        gx
    }
}

/// Batch normalization over (batch, length) per channel.
#[derive(Debug, Clone)]
pub struct BatchNorm1d<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    x_hat: Tensor3<T>,
    inv_std: Vec<T>,
    train: bool,
}

impl<T: Float> BatchNorm1d<T> {
    pub fn new(ch: usize) -> Self {
        Self {
            gamma: Param::filled(&[ch], T::one()),
            beta: Param::zeros(&[ch]),
            running_mean: vec![T::zero(); ch],
            running_var: vec![T::one(); ch],
            momentum: 0.1,
            eps: 1e-5,
            cache: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor3<T>, train: bool, record: bool) -> Tensor3<T> {
        let ch = self.gamma.len();
        assert_eq!(x.c, ch);
        let n = (x.b * x.l) as f64;
        let mut y = Tensor3::zeros(x.b, x.c, x.l);
        let mut x_hat = Tensor3::zeros(x.b, x.c, x.l);
        let mut inv_std = vec![T::zero(); ch];

        for ci in 0..ch {
            let (mean, var) = if train {
                let mut s = T::zero();
                for bi in 0..x.b {
                    for v in x.row(bi, ci) {
                        s = s + *v;
                    }
                }
                let mean = s / c::<T>(n);
                let mut v2 = T::zero();
                for bi in 0..x.b {
                    for v in x.row(bi, ci) {
                        let d = *v - mean;
                        v2 = v2 + d * d;
                    }
                }
                let var = v2 / c::<T>(n);
                // Running stats move only in training mode; the update
                // uses the unbiased variance.
                let mom = c::<T>(self.momentum);
                let unbiased = if n > 1.0 { v2 / c::<T>(n - 1.0) } else { var };
                self.running_mean[ci] =
                    (T::one() - mom) * self.running_mean[ci] + mom * mean;
                self.running_var[ci] = (T::one() - mom) * self.running_var[ci] + mom * unbiased;
                (mean, var)
            } else {
                (self.running_mean[ci], self.running_var[ci])
            };
            let istd = T::one() / (var + c::<T>(self.eps)).sqrt();
            inv_std[ci] = istd;
            let (g, b) = (self.gamma.data[ci], self.beta.data[ci]);
            for bi in 0..x.b {
                let xr = x.row(bi, ci);
                let xh = x_hat.row_mut(bi, ci);
                for (li, v) in xr.iter().enumerate() {
                    xh[li] = (*v - mean) * istd;
                }
            }
            for bi in 0..x.b {
                let xh: Vec<T> = x_hat.row(bi, ci).to_vec();
                let yr = y.row_mut(bi, ci);
                for (li, h) in xh.iter().enumerate() {
                    yr[li] = g * *h + b;
                }
            }
        }
        if record {
            self.cache = Some(BnCache { x_hat, inv_std, train });
        }
        y
    }

    pub fn backward(&mut self, gy: &Tensor3<T>) -> Tensor3<T> {
        let cache = self.cache.take().expect("bn backward without forward");
        let ch = self.gamma.len();
        let n = c::<T>((gy.b * gy.l) as f64);
        let mut gx = Tensor3::zeros(gy.b, gy.c, gy.l);

        for ci in 0..ch {
            let mut sum_gy = T::zero();
            let mut sum_gy_xhat = T::zero();
            for bi in 0..gy.b {
                let gr = gy.row(bi, ci);
                let xh = cache.x_hat.row(bi, ci);
                for li in 0..gy.l {
                    sum_gy = sum_gy + gr[li];
                    sum_gy_xhat = sum_gy_xhat + gr[li] * xh[li];
                }
            }
            self.beta.grad[ci] = self.beta.grad[ci] + sum_gy;
            self.gamma.grad[ci] = self.gamma.grad[ci] + sum_gy_xhat;

            let g_istd = self.gamma.data[ci] * cache.inv_std[ci];
            for bi in 0..gy.b {
                let gr = gy.row(bi, ci);
                let xh = cache.x_hat.row(bi, ci);
                let gxr = gx.row_mut(bi, ci);
                for li in 0..gy.l {
                    gxr[li] = if cache.train {
                        g_istd * (gr[li] - sum_gy / n - xh[li] * sum_gy_xhat / n)
                    } else {
                        g_istd * gr[li]
                    };
                }
            }
        }
        gx
    }
}

/// SiLU activation (x * sigmoid(x)).
#[derive(Debug, Clone, Default)]
pub struct Silu<T> {
    cache_x: Option<Tensor3<T>>,
}

impl<T: Float> Silu<T> {
    pub fn new() -> Self {
        Self { cache_x: None }
    }

    pub fn forward(&mut self, x: &Tensor3<T>, record: bool) -> Tensor3<T> {
        let mut y = x.clone();
        for v in &mut y.data {
            *v = *v * sigmoid(*v);
        }
        if record {
            self.cache_x = Some(x.clone());
        }
        y
    }

    pub fn backward(&mut self, gy: &Tensor3<T>) -> Tensor3<T> {
        let x = self.cache_x.take().expect("silu backward without forward");
        let mut gx = gy.clone();
        for (g, xv) in gx.data.iter_mut().zip(&x.data) {
            let s = sigmoid(*xv);
            *g = *g * (s * (T::one() + *xv * (T::one() - s)));
        }
        gx
    }
}

/// Squeeze-and-excitation gate over channels.
#[derive(Debug, Clone)]
pub struct SqueezeExcite<T> {
    pub w1: Param<T>, // [se_ch, ch]
    pub b1: Param<T>,
    pub w2: Param<T>, // [ch, se_ch]
    pub b2: Param<T>,
    pub ch: usize,
    pub se_ch: usize,
    cache: Option<SeCache<T>>,
}

#[derive(Debug, Clone)]
struct SeCache<T> {
    x: Tensor3<T>,
    s: Tensor2<T>,  // pooled input
    z1: Tensor2<T>, // pre-activation of the squeeze layer
    h: Tensor2<T>,  // silu(z1)
    g: Tensor2<T>,  // sigmoid gate
}

impl<T: Float> SqueezeExcite<T> {
    pub fn new<R: Rng + ?Sized>(ch: usize, se_ch: usize, rng: &mut R) -> Self {
        Self {
            w1: kaiming_uniform(&[se_ch, ch], ch, rng),
            b1: Param::zeros(&[se_ch]),
            w2: kaiming_uniform(&[ch, se_ch], se_ch, rng),
            b2: Param::zeros(&[ch]),
            ch,
            se_ch,
            cache: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor3<T>, record: bool) -> Tensor3<T> {
        assert_eq!(x.c, self.ch);
        let inv_l = T::one() / c::<T>(x.l as f64);
        let mut s = Tensor2::<T>::zeros(x.b, self.ch);
        for bi in 0..x.b {
            for ci in 0..self.ch {
                let mut acc = T::zero();
                for v in x.row(bi, ci) {
                    acc = acc + *v;
                }
                s.row_mut(bi)[ci] = acc * inv_l;
            }
        }
        let mut z1 = Tensor2::<T>::zeros(x.b, self.se_ch);
        let mut h = Tensor2::<T>::zeros(x.b, self.se_ch);
        for bi in 0..x.b {
            for o in 0..self.se_ch {
                let mut acc = self.b1.data[o];
                for i in 0..self.ch {
                    acc = acc + self.w1.data[o * self.ch + i] * s.row(bi)[i];
                }
                z1.row_mut(bi)[o] = acc;
                h.row_mut(bi)[o] = acc * sigmoid(acc);
            }
        }
        let mut g = Tensor2::<T>::zeros(x.b, self.ch);
        for bi in 0..x.b {
            for o in 0..self.ch {
                let mut acc = self.b2.data[o];
                for i in 0..self.se_ch {
                    acc = acc + self.w2.data[o * self.se_ch + i] * h.row(bi)[i];
                }
                g.row_mut(bi)[o] = sigmoid(acc);
            }
        }
        let mut y = x.clone();
        for bi in 0..x.b {
            for ci in 0..self.ch {
                let gate = g.row(bi)[ci];
                for v in y.row_mut(bi, ci) {
                    *v = *v * gate;
                }
            }
        }
        if record {
            self.cache = Some(SeCache { x: x.clone(), s, z1, h, g });
        }
        y
    }

    pub fn backward(&mut self, gy: &Tensor3<T>) -> Tensor3<T> {
        let cache = self.cache.take().expect("se backward without forward");
        let (x, s, z1, h, g) = (cache.x, cache.s, cache.z1, cache.h, cache.g);
        let inv_l = T::one() / c::<T>(x.l as f64);

        // Gradient w.r.t. the gate and the direct input path.
        let mut gg = Tensor2::<T>::zeros(x.b, self.ch);
        let mut gx = Tensor3::zeros(x.b, x.c, x.l);
        for bi in 0..x.b {
            for ci in 0..self.ch {
                let gate = g.row(bi)[ci];
                let gyr = gy.row(bi, ci);
                let xr = x.row(bi, ci);
                let gxr = gx.row_mut(bi, ci);
                let mut acc = T::zero();
                for li in 0..x.l {
                    acc = acc + gyr[li] * xr[li];
                    gxr[li] = gyr[li] * gate;
                }
                gg.row_mut(bi)[ci] = acc;
            }
        }

        // Through sigmoid: z2 = logit(g).
        let mut gz2 = Tensor2::<T>::zeros(x.b, self.ch);
        for bi in 0..x.b {
            for ci in 0..self.ch {
                let gv = g.row(bi)[ci];
                gz2.row_mut(bi)[ci] = gg.row(bi)[ci] * gv * (T::one() - gv);
            }
        }
        // Excite linear: z2 = W2 h + b2.
        let mut gh = Tensor2::<T>::zeros(x.b, self.se_ch);
        for bi in 0..x.b {
            for o in 0..self.ch {
                let gz = gz2.row(bi)[o];
                self.b2.grad[o] = self.b2.grad[o] + gz;
                for i in 0..self.se_ch {
                    self.w2.grad[o * self.se_ch + i] =
                        self.w2.grad[o * self.se_ch + i] + gz * h.row(bi)[i];
                    gh.row_mut(bi)[i] = gh.row(bi)[i] + self.w2.data[o * self.se_ch + i] * gz;
                }
            }
        }
        // Through SiLU.
        let mut gz1 = Tensor2::<T>::zeros(x.b, self.se_ch);
        for bi in 0..x.b {
            for o in 0..self.se_ch {
                let z = z1.row(bi)[o];
                let sg = sigmoid(z);
                gz1.row_mut(bi)[o] = gh.row(bi)[o] * (sg * (T::one() + z * (T::one() - sg)));
            }
        }
        // Squeeze linear: z1 = W1 s + b1.
        let mut gs = Tensor2::<T>::zeros(x.b, self.ch);
        for bi in 0..x.b {
            for o in 0..self.se_ch {
                let gz = gz1.row(bi)[o];
                self.b1.grad[o] = self.b1.grad[o] + gz;
                for i in 0..self.ch {
                    self.w1.grad[o * self.ch + i] =
                        self.w1.grad[o * self.ch + i] + gz * s.row(bi)[i];
                    gs.row_mut(bi)[i] = gs.row(bi)[i] + self.w1.data[o * self.ch + i] * gz;
                }
            }
        }
        // Pooling backward into the input path.
        for bi in 0..x.b {
            for ci in 0..self.ch {
                let add = gs.row(bi)[ci] * inv_l;
                for v in gx.row_mut(bi, ci) {
                    *v = *v + add;
                }
            }
        }
        gx
    }
}

/// Fully connected layer on 2D activations.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub w: Param<T>, // [out, in]
    pub b: Param<T>,
    pub inf: usize,
    pub outf: usize,
    cache_x: Option<Tensor2<T>>,
}

impl<T: Float> Linear<T> {
    pub fn new<R: Rng + ?Sized>(inf: usize, outf: usize, rng: &mut R) -> Self {
        Self {
            w: kaiming_uniform(&[outf, inf], inf, rng),
            b: Param::zeros(&[outf]),
            inf,
            outf,
            cache_x: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor2<T>, record: bool) -> Tensor2<T> {
        assert_eq!(x.c, self.inf);
        let mut y = Tensor2::zeros(x.r, self.outf);
        for ri in 0..x.r {
            let xr = x.row(ri);
            let yr = y.row_mut(ri);
            for o in 0..self.outf {
                let mut acc = self.b.data[o];
                let wr = &self.w.data[o * self.inf..(o + 1) * self.inf];
                for i in 0..self.inf {
                    acc = acc + wr[i] * xr[i];
                }
                yr[o] = acc;
            }
        }
        if record {
            self.cache_x = Some(x.clone());
        }
        y
    }

    pub fn backward(&mut self, gy: &Tensor2<T>) -> Tensor2<T> {
        let x = self.cache_x.take().expect("linear backward without forward");
        let mut gx = Tensor2::zeros(x.r, self.inf);
        for ri in 0..x.r {
            let xr = x.row(ri);
            let gr = gy.row(ri);
            let gxr = gx.row_mut(ri);
            for o in 0..self.outf {
                let gv = gr[o];
                self.b.grad[o] = self.b.grad[o] + gv;
                let wr = &self.w.data[o * self.inf..(o + 1) * self.inf];
                for i in 0..self.inf {
                    self.w.grad[o * self.inf + i] = self.w.grad[o * self.inf + i] + gv * xr[i];
                    gxr[i] = gxr[i] + wr[i] * gv;
                }
            }
        }
        gx
    }
}

/// Global average pool over length: 3D -> 2D.
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    cache_l: Option<usize>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        Self { cache_l: None }
    }

    pub fn forward<T: Float>(&mut self, x: &Tensor3<T>, record: bool) -> Tensor2<T> {
        let inv_l = T::one() / c::<T>(x.l as f64);
        let mut y = Tensor2::zeros(x.b, x.c);
        for bi in 0..x.b {
            for ci in 0..x.c {
                let mut acc = T::zero();
                for v in x.row(bi, ci) {
                    acc = acc + *v;
                }
                y.row_mut(bi)[ci] = acc * inv_l;
            }
        }
        if record {
            self.cache_l = Some(x.l);
        }
        y
    }

    pub fn backward<T: Float>(&mut self, gy: &Tensor2<T>) -> Tensor3<T> {
        let l = self.cache_l.take().expect("pool backward without forward");
        let inv_l = T::one() / c::<T>(l as f64);
        let mut gx = Tensor3::zeros(gy.r, gy.c, l);
        for bi in 0..gy.r {
            for ci in 0..gy.c {
                let g = gy.row(bi)[ci] * inv_l;
                for v in gx.row_mut(bi, ci) {
                    *v = g;
                }
            }
        }
        gx
    }
}

/// Inverted dropout on 2D activations (train mode only).
#[derive(Debug, Clone)]
pub struct Dropout<T> {
    pub p: f64,
    cache_mask: Option<Vec<T>>,
}

impl<T: Float> Dropout<T> {
    pub fn new(p: f64) -> Self {
        assert!((0.0..1.0).contains(&p));
        Self { p, cache_mask: None }
    }

    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        x: &Tensor2<T>,
        train: bool,
        record: bool,
        rng: &mut R,
    ) -> Tensor2<T> {
        if !train || self.p == 0.0 {
            if record {
                self.cache_mask = Some(vec![T::one(); x.data.len()]);
            }
            return x.clone();
        }
        let keep = T::one() / c::<T>(1.0 - self.p);
        let mask: Vec<T> = (0..x.data.len())
            .map(|_| if rng.random::<f64>() < self.p { T::zero() } else { keep })
            .collect();
        let mut y = x.clone();
        for (v, m) in y.data.iter_mut().zip(&mask) {
            *v = *v * *m;
        }
        if record {
            self.cache_mask = Some(mask);
        }
        y
    }

    pub fn backward(&mut self, gy: &Tensor2<T>) -> Tensor2<T> {
        let mask = self.cache_mask.take().expect("dropout backward without forward");
        let mut gx = gy.clone();
        for (g, m) in gx.data.iter_mut().zip(&mask) {
            *g = *g * *m;
        }
        gx
    }
}
