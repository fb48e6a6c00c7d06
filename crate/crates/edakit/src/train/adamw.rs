//! Adam with decoupled weight decay.
//!
//! The decay multiplies each weight by `(1 - lr * weight_decay)` before
//! the Adam update, so a step with zero gradients shrinks weights by
//! exactly that factor.

use num_traits::Float;

use crate::encoder::tensor::{c, Param};

#[derive(Debug, Clone)]
pub struct AdamW<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Float> AdamW<T> {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One update over the parameter list (order must be stable across
    /// steps; moment buffers are allocated on first use).
    pub fn step(&mut self, params: &mut [&mut Param<T>]) {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.v = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
        }
        assert_eq!(self.m.len(), params.len(), "parameter list changed size");
        self.t += 1;
        let b1 = c::<T>(self.beta1);
        let b2 = c::<T>(self.beta2);
        let bc1 = c::<T>(1.0 - self.beta1.powi(self.t as i32));
        let bc2 = c::<T>(1.0 - self.beta2.powi(self.t as i32));
        let lr = c::<T>(self.lr);
        let eps = c::<T>(self.eps);
        let decay_mul = c::<T>(1.0 - self.lr * self.weight_decay);

        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            debug_assert_eq!(p.len(), m.len(), "parameter shape changed");
            for i in 0..p.data.len() {
                let g = p.grad[i];
                m[i] = b1 * m[i] + (T::one() - b1) * g;
                v[i] = b2 * v[i] + (T::one() - b2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.data[i] = p.data[i] * decay_mul - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
