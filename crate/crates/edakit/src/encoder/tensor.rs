//! Minimal dense tensors and parameter buffers for the encoder.
//!
//! Everything is generic over the float type: production code runs the
//! networks in `f32`, the gradient-check tests re-run them in `f64`.

use num_traits::Float;

/// Convert an `f64` constant into the working float type.
pub fn c<T: Float>(v: f64) -> T {
    T::from(v).expect("constant fits float type")
}

/// Batch x channels x length activation buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    pub b: usize,
    pub c: usize,
    pub l: usize,
    pub data: Vec<T>,
}

impl<T: Float> Tensor3<T> {
    pub fn zeros(b: usize, c: usize, l: usize) -> Self {
        Self { b, c, l, data: vec![T::zero(); b * c * l] }
    }

    #[inline]
    pub fn idx(&self, bi: usize, ci: usize, li: usize) -> usize {
        (bi * self.c + ci) * self.l + li
    }

    /// Contiguous row `(b, c, ..)`.
    #[inline]
    pub fn row(&self, bi: usize, ci: usize) -> &[T] {
        let at = (bi * self.c + ci) * self.l;
        &self.data[at..at + self.l]
    }

    #[inline]
    pub fn row_mut(&mut self, bi: usize, ci: usize) -> &mut [T] {
        let at = (bi * self.c + ci) * self.l;
        &mut self.data[at..at + self.l]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Batch x features matrix (embeddings, pooled heads).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<T> {
    pub r: usize,
    pub c: usize,
    pub data: Vec<T>,
}

impl<T: Float> Tensor2<T> {
    pub fn zeros(r: usize, c: usize) -> Self {
        Self { r, c, data: vec![T::zero(); r * c] }
    }

    #[inline]
    pub fn row(&self, ri: usize) -> &[T] {
        &self.data[ri * self.c..(ri + 1) * self.c]
    }

    #[inline]
    pub fn row_mut(&mut self, ri: usize) -> &mut [T] {
        &mut self.data[ri * self.c..(ri + 1) * self.c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A trainable parameter buffer with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Param<T> {
    pub data: Vec<T>,
    pub grad: Vec<T>,
    /// Shape for checkpoint validation (row-major).
    pub shape: Vec<usize>,
}

impl<T: Float> Param<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Self { data: vec![T::zero(); n], grad: vec![T::zero(); n], shape: shape.to_vec() }
    }

    pub fn filled(shape: &[usize], v: T) -> Self {
        let n: usize = shape.iter().product();
        Self { data: vec![v; n], grad: vec![T::zero(); n], shape: shape.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = T::zero());
    }
}

/// Kaiming-uniform initialization: U(-b, b), b = sqrt(6 / fan_in).
pub fn kaiming_uniform<T: Float, R: rand::Rng + ?Sized>(
    shape: &[usize],
    fan_in: usize,
    rng: &mut R,
) -> Param<T> {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<T> = (0..n)
        .map(|_| c::<T>(rng.random_range(-bound..bound)))
        .collect();
    Param { grad: vec![T::zero(); n], data, shape: shape.to_vec() }
}
