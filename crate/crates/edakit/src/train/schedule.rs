//! Validation-loss driven learning-rate schedule and early stopping.

/// Reduce-on-plateau: after `patience` consecutive epochs without a new
/// best validation loss, signal a learning-rate reduction and restart
/// the count.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    pub factor: f64,
    pub patience: usize,
    best: f64,
    since: usize,
}

impl PlateauScheduler {
    pub fn new(factor: f64, patience: usize) -> Self {
        assert!(factor > 0.0 && factor < 1.0 && patience > 0);
        Self { factor, patience, best: f64::INFINITY, since: 0 }
    }

    /// Returns `true` when the learning rate should be multiplied by
    /// `factor` after this observation.
    pub fn observe(&mut self, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.since = 0;
            return false;
        }
        self.since += 1;
        if self.since >= self.patience {
            self.since = 0;
            return true;
        }
        false
    }
}

/// Early stopping on the validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    pub patience: usize,
    best: f64,
    pub best_epoch: usize,
    since: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        assert!(patience > 0);
        Self { patience, best: f64::INFINITY, best_epoch: 0, since: 0 }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Observe one epoch; returns `true` when training should stop.
    /// `improved` can be queried via `best_epoch == epoch`.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.since = 0;
            false
        } else {
            self.since += 1;
            self.since >= self.patience
        }
    }
}
