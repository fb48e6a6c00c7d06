//! Fixed-length three-channel windowing and label attachment.
//!
//! Windows are 60 s (240 samples at 4 Hz) with channels ordered
//! (original, phasic, tonic). Windowing is a streaming transform: the
//! iterator holds a reference to the decomposition and materializes one
//! window at a time, so working memory stays O(window) regardless of
//! recording length. Windows never span a recording boundary.

pub mod shard;

use std::sync::Arc;

use thiserror::Error;

use crate::decompose::Decomposition;

/// Samples per window (60 s at 4 Hz).
pub const WINDOW_SAMPLES: usize = 240;
/// Window duration in seconds.
pub const WINDOW_SECONDS: f64 = 60.0;
/// Channels per window.
pub const CHANNELS: usize = 3;

/// Channel order within a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Original = 0,
    Phasic = 1,
    Tonic = 2,
}

pub const ALL_CHANNELS: [Channel; 3] = [Channel::Original, Channel::Phasic, Channel::Tonic];

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("step must be >= 1")]
    ZeroStep,
    #[error("label intervals overlap for user {user_id}: [{a0}, {a1}) and [{b0}, {b1})")]
    OverlappingIntervals {
        user_id: String,
        a0: f64,
        a1: f64,
        b0: f64,
        b1: f64,
    },
}

/// One 60 s, three-channel segment with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// 3 x 240 samples, channel-major in [`Channel`] order.
    channels: Vec<f64>,
    pub user_id: Arc<str>,
    pub dataset_id: Arc<str>,
    /// Unix start time of the window in seconds.
    pub t_start: f64,
    /// Binary task label, when attached.
    pub label: Option<bool>,
    /// Residual slice for windows cut from a decomposition; augmented
    /// or deserialized windows do not carry it.
    residual: Option<Vec<f64>>,
}

impl Window {
    pub fn new(
        channels: Vec<f64>,
        user_id: Arc<str>,
        dataset_id: Arc<str>,
        t_start: f64,
    ) -> Self {
        assert_eq!(channels.len(), CHANNELS * WINDOW_SAMPLES);
        Self {
            channels,
            user_id,
            dataset_id,
            t_start,
            label: None,
            residual: None,
        }
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        let at = c as usize * WINDOW_SAMPLES;
        &self.channels[at..at + WINDOW_SAMPLES]
    }

    pub fn channel_mut(&mut self, c: Channel) -> &mut [f64] {
        let at = c as usize * WINDOW_SAMPLES;
        &mut self.channels[at..at + WINDOW_SAMPLES]
    }

    /// Flat channel-major sample view (720 values).
    pub fn samples(&self) -> &[f64] {
        &self.channels
    }

    pub fn residual(&self) -> Option<&[f64]> {
        self.residual.as_deref()
    }

    /// Drop the residual slice (augmentations invalidate it).
    pub fn clear_residual(&mut self) {
        self.residual = None;
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(|v| v.is_finite())
    }
}

/// Recording provenance carried into windows.
#[derive(Debug, Clone)]
pub struct RecordingMeta {
    pub user_id: Arc<str>,
    pub dataset_id: Arc<str>,
    pub start_unix: f64,
}

/// Window provenance without the samples, as consumed by fold planning
/// and persisted next to feature matrices.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WindowMeta {
    pub user_id: String,
    pub dataset_id: String,
    pub t_start: f64,
    pub label: Option<bool>,
}

impl From<&Window> for WindowMeta {
    fn from(w: &Window) -> Self {
        Self {
            user_id: w.user_id.to_string(),
            dataset_id: w.dataset_id.to_string(),
            t_start: w.t_start,
            label: w.label,
        }
    }
}

/// Number of windows produced for a series of length `len` at `step`.
pub fn window_count(len: usize, step: usize) -> usize {
    if len < WINDOW_SAMPLES || step == 0 {
        0
    } else {
        (len - WINDOW_SAMPLES) / step + 1
    }
}

/// Streaming cutter over a decomposition.
///
/// Yields `floor((L - 240) / step) + 1` windows whose `t_start`
/// increments by `step / 4` seconds; a series shorter than one window
/// yields an empty stream (callers count those in their skip stats).
pub fn make_windows<'a>(
    dec: &'a Decomposition,
    step_samples: usize,
    rec: &RecordingMeta,
) -> Result<WindowIter<'a>, SegmentError> {
    if step_samples == 0 {
        return Err(SegmentError::ZeroStep);
    }
    Ok(WindowIter {
        dec,
        meta: rec.clone(),
        step: step_samples,
        next_start: 0,
        remaining: window_count(dec.len(), step_samples),
    })
}

pub struct WindowIter<'a> {
    dec: &'a Decomposition,
    meta: RecordingMeta,
    step: usize,
    next_start: usize,
    remaining: usize,
}

impl Iterator for WindowIter<'_> {
    type Item = Window;

    fn next(&mut self) -> Option<Window> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let s = self.next_start;
        self.next_start += self.step;

        let dec = self.dec;
        let mut channels = Vec::with_capacity(CHANNELS * WINDOW_SAMPLES);
        let mut residual = Vec::with_capacity(WINDOW_SAMPLES);
        for i in s..s + WINDOW_SAMPLES {
            // original := tonic + phasic + residual, which makes the
            // additive window invariant exact by construction.
            channels.push(dec.tonic[i] + dec.phasic[i] + dec.residual[i]);
        }
        for i in s..s + WINDOW_SAMPLES {
            channels.push(dec.phasic[i]);
        }
        for i in s..s + WINDOW_SAMPLES {
            channels.push(dec.tonic[i]);
        }
        for i in s..s + WINDOW_SAMPLES {
            residual.push(dec.residual[i]);
        }

        Some(Window {
            channels,
            user_id: self.meta.user_id.clone(),
            dataset_id: self.meta.dataset_id.clone(),
            t_start: self.meta.start_unix + s as f64 / crate::signal::RATE_HZ,
            label: None,
            residual: Some(residual),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// A labeled time interval `[t0, t1)` for one user.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LabelInterval {
    pub dataset_id: String,
    pub user_id: String,
    pub t0: f64,
    pub t1: f64,
    pub label: bool,
}

/// Attach labels by full containment: a window keeps label `l` iff its
/// whole `[t_start, t_start + 60)` span lies inside a single interval
/// with label `l`; all other windows are dropped.
pub fn attach_labels(
    windows: impl Iterator<Item = Window>,
    intervals: &[LabelInterval],
) -> Result<Vec<Window>, SegmentError> {
    validate_intervals(intervals)?;
    let mut out = Vec::new();
    for mut w in windows {
        let t0 = w.t_start;
        let t1 = w.t_start + WINDOW_SECONDS;
        let hit = intervals.iter().find(|iv| {
            iv.user_id.as_str() == &*w.user_id
                && iv.dataset_id.as_str() == &*w.dataset_id
                && iv.t0 <= t0
                && t1 <= iv.t1
        });
        if let Some(iv) = hit {
            w.label = Some(iv.label);
            out.push(w);
        }
    }
    Ok(out)
}

fn validate_intervals(intervals: &[LabelInterval]) -> Result<(), SegmentError> {
    let mut sorted: Vec<&LabelInterval> = intervals.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.dataset_id, &a.user_id, a.t0)
            .partial_cmp(&(&b.dataset_id, &b.user_id, b.t0))
            .unwrap()
    });
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.user_id == b.user_id && a.dataset_id == b.dataset_id && b.t0 < a.t1 {
            return Err(SegmentError::OverlappingIntervals {
                user_id: a.user_id.clone(),
                a0: a.t0,
                a1: a.t1,
                b0: b.t0,
                b1: b.t1,
            });
        }
    }
    Ok(())
}
