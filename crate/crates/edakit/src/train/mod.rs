//! Training stack: contrastive and reconstruction losses, decoupled
//! weight decay Adam, plateau scheduling, early stopping, and the
//! seeded contrastive fit loop.

mod adamw;
mod fit;
mod infonce;
mod schedule;

pub use adamw::AdamW;
pub use fit::{fit_contrastive, ContrastiveConfig, EpochLog, TrainReport};
pub use infonce::{info_nce, info_nce_with_grad, two_view_pairing};
pub use schedule::{EarlyStopper, PlateauScheduler};

use num_traits::Float;
use thiserror::Error;

use crate::encoder::tensor::Tensor3;
use crate::encoder::EncoderError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("embedding row {0} is a zero vector (cosine similarity undefined)")]
    ZeroVector(usize),
    #[error("bad pairing: {0}")]
    BadPairing(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("no training data")]
    EmptyData,
    #[error("training diverged (non-finite loss) at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: usize },
    #[error("shape mismatch in loss: {0}")]
    LossShape(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

/// Masked/visible split of the reconstruction loss.
#[derive(Debug, Clone, PartialEq)]
pub struct MaeLossOutput<T> {
    pub loss: T,
    /// Mean per-patch absolute error over masked patches, when any.
    pub masked_mean: Option<T>,
    /// Mean per-patch absolute error over visible patches, when any.
    pub visible_mean: Option<T>,
    /// True when every side with nonzero weight had no patches, so the
    /// loss is structurally zero.
    pub degenerate: bool,
}

/// Composite reconstruction loss
/// `alpha * masked-mean + (1 - alpha) * visible-mean`, where each term
/// is the mean over its patches of the within-patch mean absolute
/// error, and a side with zero patches contributes 0.
pub fn mae_loss<T: Float>(
    x: &Tensor3<T>,
    x_hat: &Tensor3<T>,
    mask: &[bool],
    alpha: f64,
    patch_size: usize,
) -> Result<MaeLossOutput<T>, TrainError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(TrainError::BadConfig(format!("alpha {alpha} outside [0, 1]")));
    }
    if x.b != x_hat.b || x.c != x_hat.c || x.l != x_hat.l {
        return Err(TrainError::LossShape(format!(
            "input {}x{}x{} vs reconstruction {}x{}x{}",
            x.b, x.c, x.l, x_hat.b, x_hat.c, x_hat.l
        )));
    }
    if patch_size == 0 || !x.l.is_multiple_of(patch_size) {
        return Err(TrainError::LossShape(format!(
            "patch size {patch_size} does not divide length {}",
            x.l
        )));
    }
    let n_patches = x.l / patch_size;
    if mask.len() != n_patches {
        return Err(TrainError::LossShape(format!(
            "mask length {} != {n_patches} patches",
            mask.len()
        )));
    }

    let per_patch = T::from(1.0 / (x.c * patch_size) as f64).unwrap();
    let mut masked_sum = T::zero();
    let mut visible_sum = T::zero();
    let mut masked_n = 0usize;
    let mut visible_n = 0usize;
    for bi in 0..x.b {
        for (p, is_masked) in mask.iter().enumerate() {
            let mut err = T::zero();
            for ci in 0..x.c {
                let a = &x.row(bi, ci)[p * patch_size..(p + 1) * patch_size];
                let b = &x_hat.row(bi, ci)[p * patch_size..(p + 1) * patch_size];
                for t in 0..patch_size {
                    err = err + (a[t] - b[t]).abs();
                }
            }
            let patch_mae = err * per_patch;
            if *is_masked {
                masked_sum = masked_sum + patch_mae;
                masked_n += 1;
            } else {
                visible_sum = visible_sum + patch_mae;
                visible_n += 1;
            }
        }
    }

    let masked_mean = (masked_n > 0).then(|| masked_sum / T::from(masked_n).unwrap());
    let visible_mean = (visible_n > 0).then(|| visible_sum / T::from(visible_n).unwrap());
    let a = T::from(alpha).unwrap();
    let loss = a * masked_mean.unwrap_or(T::zero())
        + (T::one() - a) * visible_mean.unwrap_or(T::zero());
    let masked_side_live = alpha > 0.0 && masked_n > 0;
    let visible_side_live = alpha < 1.0 && visible_n > 0;
    let degenerate = !masked_side_live && !visible_side_live;

    Ok(MaeLossOutput { loss, masked_mean, visible_mean, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensors(b: usize, l: usize) -> (Tensor3<f64>, Tensor3<f64>) {
        let mut x = Tensor3::<f64>::zeros(b, 3, l);
        let mut rng = crate::rng::stream_rng(21, 0);
        use rand::Rng;
        for v in &mut x.data {
            *v = rng.random_range(0.0..1.0);
        }
        (x.clone(), x)
    }

    #[test]
    fn perfect_reconstruction_is_zero() {
        let (x, x_hat) = tensors(2, 240);
        let out = mae_loss(&x, &x_hat, &vec![false; 30], 0.5, 8).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(!out.degenerate);
    }

    #[test]
    fn unmasked_configuration_is_visible_only() {
        let (x, mut x_hat) = tensors(1, 240);
        for v in &mut x_hat.data {
            *v += 0.1;
        }
        let alpha = 0.3;
        let out = mae_loss(&x, &x_hat, &vec![false; 30], alpha, 8).unwrap();
        assert!(out.masked_mean.is_none());
        let visible = out.visible_mean.unwrap();
        assert!((out.loss - (1.0 - alpha) * visible).abs() < 1e-12);
    }

    #[test]
    fn weighted_combination_matches_hand_computation() {
        // Two patches: masked patch error 1.0, visible patch error 0.5.
        let l = 16;
        let ps = 8;
        let x = Tensor3::<f64>::zeros(1, 3, l);
        let mut x_hat = Tensor3::<f64>::zeros(1, 3, l);
        for ci in 0..3 {
            for t in 0..ps {
                x_hat.row_mut(0, ci)[t] = 1.0; // patch 0: |err| = 1
                x_hat.row_mut(0, ci)[ps + t] = 0.5; // patch 1: |err| = 0.5
            }
        }
        let out = mae_loss(&x, &x_hat, &[true, false], 0.5, ps).unwrap();
        assert!((out.loss - 0.75).abs() < 1e-12);
        assert_eq!(out.masked_mean, Some(1.0));
        assert_eq!(out.visible_mean, Some(0.5));
    }

    #[test]
    fn all_masked_with_alpha_zero_degenerates_to_zero_with_flag() {
        let (x, mut x_hat) = tensors(1, 240);
        for v in &mut x_hat.data {
            *v += 1.0;
        }
        let out = mae_loss(&x, &x_hat, &vec![true; 30], 0.0, 8).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.degenerate);
    }

    #[test]
    fn shape_and_alpha_guards() {
        let (x, x_hat) = tensors(1, 240);
        assert!(mae_loss(&x, &x_hat, &vec![false; 29], 0.5, 8).is_err());
        assert!(mae_loss(&x, &x_hat, &vec![false; 30], 1.5, 8).is_err());
        assert!(mae_loss(&x, &x_hat, &vec![false; 30], 0.5, 7).is_err());
    }
}
