//! Conductance series container and zero-phase Butterworth filtering.
//!
//! The corpus is fixed at 4 Hz, so [`Series`] pins its rate and the
//! filter entry points validate cutoffs against the 2 Hz Nyquist limit.
//! All filters are applied forward–backward (zero phase) with odd
//! reflective edge padding, so peak timing is preserved for downstream
//! peak features.

mod design;

pub use design::{design_butterworth, BandKind, Sos};

use thiserror::Error;

/// Fixed corpus sampling rate in Hz.
pub const RATE_HZ: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("cutoff out of range: {0} Hz (must lie strictly inside (0, {nyquist}) Hz)", nyquist = RATE_HZ / 2.0)]
    CutoffOutOfRange(f64),
    #[error("band edges must be strictly increasing: ({0}, {1})")]
    EdgesNotIncreasing(f64, f64),
    #[error("series too short: {len} samples, need more than {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("series contains a non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("filter order must be >= 1")]
    ZeroOrder,
    #[error("expected {expected} band edge(s), got {got}")]
    WrongEdgeCount { expected: usize, got: usize },
}

/// A finite 4 Hz conductance series in microsiemens.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
}

impl Series {
    /// Wrap a sample vector, rejecting non-finite values.
    pub fn new(values: Vec<f64>) -> Result<Self, SignalError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn rate_hz(&self) -> f64 {
        RATE_HZ
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Zero-phase Butterworth low-pass filter.
///
/// Designs a digital Butterworth filter of the given order via the
/// bilinear transform and applies it forward and backward, so the
/// result has exactly zero phase and the squared magnitude response of
/// the one-pass design.
pub fn butterworth_lowpass(
    s: &Series,
    cutoff_hz: f64,
    order: usize,
) -> Result<Series, SignalError> {
    filter_band(s, BandKind::Low, &[cutoff_hz], order)
}

/// Zero-phase Butterworth filter of any band kind.
///
/// `edges` holds one cutoff for `Low`/`High` and two strictly
/// increasing cutoffs for `BandPass`/`BandStop`, all strictly inside
/// `(0, 2)` Hz. Band kinds double the pole count of the design, which
/// is reflected in the edge-padding length requirement.
pub fn filter_band(
    s: &Series,
    kind: BandKind,
    edges: &[f64],
    order: usize,
) -> Result<Series, SignalError> {
    let sos = design_butterworth(kind, edges, order, RATE_HZ)?;
    let out = zero_phase(&sos, s.values())?;
    Ok(Series { values: out })
}

/// Forward–backward application of an SOS cascade on a raw slice.
///
/// Pads each end with `3 * n_poles` odd-reflected samples before the
/// first pass, so `x.len()` must exceed that padding length.
pub fn zero_phase(sos: &Sos, x: &[f64]) -> Result<Vec<f64>, SignalError> {
    let pad = 3 * sos.n_poles();
    if x.len() <= pad {
        return Err(SignalError::SeriesTooShort {
            len: x.len(),
            min: pad,
        });
    }

    // Odd reflection about the end samples, as in standard filtfilt.
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let mut y = sos.filter_with_steady_state(&ext);
    y.reverse();
    let mut z = sos.filter_with_steady_state(&y);
    z.reverse();

    Ok(z[pad..pad + n].to_vec())
}
