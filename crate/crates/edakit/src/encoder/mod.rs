//! 1D convolutional encoder with hand-written reverse-mode gradients.
//!
//! The network maps `B x 3 x 240` windows to `B x 64` embeddings (the
//! reference configuration; smaller configurations are supported for
//! tests and smoke training). Forward passes in training mode record a
//! tape of cached activations that [`Encoder::backward`] consumes.
//! The module also hosts a minimal masked-autoencoder network used by
//! the reconstruction experiments.
//!
//! Everything is generic over the float type: the production path uses
//! `f32`, gradient checks re-run the same code in `f64`.

pub mod checkpoint;
mod effnet;
mod layers;
pub mod mae;
pub mod tensor;

pub use effnet::{layer_plan, Encoder, EncoderConfig, NamedTensor, PlanOp};
pub use tensor::{Param, Tensor2, Tensor3};

use thiserror::Error;

use crate::segment::Window;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("backward called without a recorded forward pass")]
    NoTape,
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("bad patch size: {0}")]
    BadPatchSize(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Stack windows into a `B x 3 x 240` input batch (f32 cast).
pub fn batch_from_windows(windows: &[&Window]) -> Tensor3<f32> {
    let b = windows.len();
    let c = crate::segment::CHANNELS;
    let l = crate::segment::WINDOW_SAMPLES;
    let mut t = Tensor3::zeros(b, c, l);
    for (bi, w) in windows.iter().enumerate() {
        for (i, v) in w.samples().iter().enumerate() {
            let ci = i / l;
            let li = i % l;
            t.row_mut(bi, ci)[li] = *v as f32;
        }
    }
    t
}

/// Frozen-encoder embeddings for a window list, batched eval-mode.
pub fn embed_windows(
    enc: &mut Encoder<f32>,
    windows: &[Window],
    batch_size: usize,
) -> Result<Vec<Vec<f32>>, EncoderError> {
    let mut out = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(batch_size.max(1)) {
        let refs: Vec<&Window> = chunk.iter().collect();
        let x = batch_from_windows(&refs);
        let emb = enc.forward_eval(&x)?;
        for r in 0..emb.r {
            out.push(emb.row(r).to_vec());
        }
    }
    Ok(out)
}
