//! The contrastive fit loop.
//!
//! Each epoch shuffles the training windows with the run seed, draws
//! two augmented views per window from counter-based RNG streams keyed
//! by `(seed, epoch, window index)`, and takes one AdamW step per
//! batch. Validation pairs are drawn once with an epoch-independent
//! stream so the validation loss is comparable across epochs.
//! Everything is deterministic given the configuration.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adamw::AdamW;
use super::infonce::{info_nce, info_nce_with_grad, two_view_pairing};
use super::schedule::{EarlyStopper, PlateauScheduler};
use super::TrainError;
use crate::augment::sample_pair;
use crate::encoder::{batch_from_windows, Encoder};
use crate::rng::{stream_rng, substream_rng};
use crate::segment::Window;

/// Contrastive training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveConfig {
    /// Softmax temperature of the contrastive loss.
    pub tau: f64,
    /// Anchors per batch (each contributes two views).
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    /// Fraction of users held out for validation.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            batch_size: 512,
            lr: 1e-3,
            weight_decay: 0.01,
            plateau_factor: 0.5,
            plateau_patience: 10,
            early_stop_patience: 30,
            max_epochs: 400,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

impl ContrastiveConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.tau <= 0.0 {
            return Err(TrainError::BadConfig("tau must be positive".into()));
        }
        if self.batch_size < 2 {
            return Err(TrainError::BadConfig(
                "batch size must be >= 2 for in-batch negatives".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.val_fraction) || self.val_fraction == 0.0 {
            return Err(TrainError::BadConfig("val_fraction must be in (0, 1)".into()));
        }
        if self.max_epochs == 0
            || self.plateau_patience == 0
            || self.early_stop_patience == 0
            || !(0.0..1.0).contains(&self.plateau_factor)
            || self.plateau_factor == 0.0
        {
            return Err(TrainError::BadConfig("degenerate schedule parameters".into()));
        }
        if self.lr <= 0.0 || self.weight_decay < 0.0 {
            return Err(TrainError::BadConfig("bad optimizer parameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Windows held out for validation (by user).
    pub val_windows: usize,
}

fn snapshot(enc: &mut Encoder<f32>) -> Vec<Vec<f32>> {
    enc.named_tensors_mut()
        .into_iter()
        .map(|(_, t)| t.data().to_vec())
        .collect()
}

fn restore(enc: &mut Encoder<f32>, snap: &[Vec<f32>]) {
    for ((_, mut t), s) in enc.named_tensors_mut().into_iter().zip(snap) {
        t.data_mut().copy_from_slice(s);
    }
}

/// Split window indices into train/validation by user (validation gets
/// about `val_fraction` of the users, at least one). Recordings from a
/// validation user never reach the optimizer, which keeps the holdout
/// leak-free. Falls back to a window split when only one user exists.
fn split_by_user(
    windows: &[Window],
    val_fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut users: Vec<(String, String)> = windows
        .iter()
        .map(|w| (w.dataset_id.to_string(), w.user_id.to_string()))
        .collect();
    users.sort();
    users.dedup();

    if users.len() >= 2 {
        let mut rng = stream_rng(seed, 0);
        users.shuffle(&mut rng);
        let n_val = ((users.len() as f64 * val_fraction).round() as usize)
            .max(1)
            .min(users.len() - 1);
        let val_users: std::collections::HashSet<&(String, String)> =
            users[..n_val].iter().collect();
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (i, w) in windows.iter().enumerate() {
            let key = (w.dataset_id.to_string(), w.user_id.to_string());
            if val_users.contains(&key) {
                val.push(i);
            } else {
                train.push(i);
            }
        }
        (train, val)
    } else {
        let mut idx: Vec<usize> = (0..windows.len()).collect();
        let mut rng = stream_rng(seed, 0);
        idx.shuffle(&mut rng);
        let n_val = ((idx.len() as f64 * val_fraction).round() as usize)
            .max(1)
            .min(idx.len().saturating_sub(1));
        let val = idx[..n_val].to_vec();
        let train = idx[n_val..].to_vec();
        (train, val)
    }
}

/// Train the encoder with the contrastive objective; the model is left
/// holding the best-validation weights.
pub fn fit_contrastive(
    windows: &[Window],
    cfg: &ContrastiveConfig,
    enc: &mut Encoder<f32>,
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    if windows.len() < 4 {
        return Err(TrainError::EmptyData);
    }
    let (train_idx, val_idx) = split_by_user(windows, cfg.val_fraction, cfg.seed);
    if train_idx.len() < 2 || val_idx.is_empty() {
        return Err(TrainError::EmptyData);
    }

    // Validation pairs: one fixed draw per window, epoch-independent.
    let val_pairs: Vec<(Window, Window)> = val_idx
        .iter()
        .map(|&i| {
            let mut rng = substream_rng(cfg.seed, u64::MAX, i as u64);
            let (a, b, _) = sample_pair(&windows[i], &mut rng);
            (a, b)
        })
        .collect();

    let mut opt = AdamW::<f32>::new(cfg.lr, cfg.weight_decay);
    let mut plateau = PlateauScheduler::new(cfg.plateau_factor, cfg.plateau_patience);
    let mut stopper = EarlyStopper::new(cfg.early_stop_patience);
    let mut best_snapshot: Option<Vec<Vec<f32>>> = None;
    let mut logs = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let mut order = train_idx.clone();
        let mut rng = substream_rng(cfg.seed, 1, epoch as u64);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0f64;
        let mut anchor_count = 0usize;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            if chunk.len() < 2 {
                continue; // a single anchor has no negatives
            }
            let n = chunk.len();
            let mut views: Vec<Window> = Vec::with_capacity(2 * n);
            let mut seconds: Vec<Window> = Vec::with_capacity(n);
            for &wi in chunk {
                let mut arng = substream_rng(cfg.seed, 2 + epoch as u64, wi as u64);
                let (a, b, _) = sample_pair(&windows[wi], &mut arng);
                views.push(a);
                seconds.push(b);
            }
            views.extend(seconds);
            let refs: Vec<&Window> = views.iter().collect();
            let x = batch_from_windows(&refs);

            let mut drop_rng = substream_rng(cfg.seed, 3 + epoch as u64, step as u64);
            let emb = enc.forward_train(&x, &mut drop_rng)?;
            let pairing = two_view_pairing(n);
            let (loss, grad) = info_nce_with_grad(&emb, &pairing, cfg.tau)?;
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch, step });
            }
            enc.zero_grad();
            enc.backward(&grad)?;
            let mut params = enc.params_mut();
            opt.step(&mut params);

            loss_sum += loss as f64 * (2 * n) as f64;
            anchor_count += 2 * n;
        }
        if anchor_count == 0 {
            return Err(TrainError::EmptyData);
        }
        let train_loss = loss_sum / anchor_count as f64;

        let val_loss = validation_loss(enc, &val_pairs, cfg)?;
        if !val_loss.is_finite() {
            return Err(TrainError::Diverged { epoch, step: usize::MAX });
        }

        if plateau.observe(val_loss) {
            opt.lr *= cfg.plateau_factor;
        }
        logs.push(EpochLog { epoch, train_loss, val_loss, lr: opt.lr });

        let stop = stopper.observe(epoch, val_loss);
        if stopper.best_epoch == epoch {
            best_snapshot = Some(snapshot(enc));
        }
        if stop {
            break;
        }
    }

    if let Some(s) = &best_snapshot {
        restore(enc, s);
    }
    Ok(TrainReport {
        epochs: logs,
        best_epoch: stopper.best_epoch,
        best_val_loss: stopper.best(),
        val_windows: val_idx.len(),
    })
}

/// Mean validation loss over fixed pairs, eval-mode.
fn validation_loss(
    enc: &mut Encoder<f32>,
    val_pairs: &[(Window, Window)],
    cfg: &ContrastiveConfig,
) -> Result<f64, TrainError> {
    let mut loss_sum = 0.0f64;
    let mut anchors = 0usize;
    for chunk in val_pairs.chunks(cfg.batch_size) {
        if chunk.len() < 2 {
            continue;
        }
        let n = chunk.len();
        let mut refs: Vec<&Window> = chunk.iter().map(|(a, _)| a).collect();
        refs.extend(chunk.iter().map(|(_, b)| b));
        let x = batch_from_windows(&refs);
        let emb = enc.forward_eval(&x)?;
        let loss = info_nce(&emb, &two_view_pairing(n), cfg.tau)?;
        loss_sum += loss as f64 * (2 * n) as f64;
        anchors += 2 * n;
    }
    if anchors == 0 {
        // Degenerate single-window validation set: score it against
        // itself is meaningless; treat as empty data.
        return Err(TrainError::EmptyData);
    }
    Ok(loss_sum / anchors as f64)
}
