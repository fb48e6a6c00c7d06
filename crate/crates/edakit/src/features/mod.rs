//! Handcrafted feature extraction on 60 s windows.
//!
//! Two stable layouts, both grouped by channel in window order
//! (original, phasic, tonic):
//!
//! * generic — `[mean, std, min, max]` per channel, 12 features;
//! * EDA-specific — 15 base features per channel, 45 features: the four
//!   generic statistics plus dynamic range, slope, |slope|, first
//!   derivative mean/std, peak count and mean peak amplitude, and four
//!   spectral features from the unnormalized forward DFT.
//!
//! Spectral conventions: the DC coefficient `X_0` is its own feature;
//! the coefficient sum, entropy and energy run over bins `1..N-1`
//! (DC excluded). Entropy normalizes by power, `P_k = |X_k|^2 / sum`,
//! with `0 log 0 := 0`. Bins whose magnitude is at or below
//! `N * eps * max|x|` count as exactly zero, which keeps the spectral
//! features of constant windows at their analytic values.

pub mod io;

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::segment::{Window, ALL_CHANNELS, WINDOW_SAMPLES};

/// Which feature layout a vector uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FeatureSet {
    Generic,
    EdaSpecific,
}

pub const GENERIC_BASE: [&str; 4] = ["mean", "std", "min", "max"];
pub const EDA_BASE: [&str; 15] = [
    "mean",
    "min",
    "max",
    "std",
    "dynamic_range",
    "slope",
    "abs_slope",
    "deriv_mean",
    "deriv_std",
    "peak_count",
    "peak_amp_mean",
    "dft_dc",
    "dft_abs_sum",
    "spectral_entropy",
    "spectral_energy",
];
const CHANNEL_PREFIX: [&str; 3] = ["orig", "phasic", "tonic"];

impl FeatureSet {
    pub fn dim(self) -> usize {
        match self {
            FeatureSet::Generic => 12,
            FeatureSet::EdaSpecific => 45,
        }
    }

    /// Ordered feature names, channel-grouped.
    pub fn names(self) -> Vec<String> {
        let base: &[&str] = match self {
            FeatureSet::Generic => &GENERIC_BASE,
            FeatureSet::EdaSpecific => &EDA_BASE,
        };
        CHANNEL_PREFIX
            .iter()
            .flat_map(|ch| base.iter().map(move |b| format!("{ch}_{b}")))
            .collect()
    }
}

/// One extracted feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub layout: FeatureSet,
    pub values: Vec<f64>,
}

/// `[mean, std (ddof=1), min, max]` for each channel.
pub fn generic_features(w: &Window) -> FeatureVector {
    let mut values = Vec::with_capacity(12);
    for c in ALL_CHANNELS {
        let x = w.channel(c);
        let (mean, std) = mean_std(x);
        let (min, max) = min_max(x);
        values.extend_from_slice(&[mean, std, min, max]);
    }
    FeatureVector { layout: FeatureSet::Generic, values }
}

/// EDA-specific extractor with a cached FFT plan.
pub struct EdaFeatureExtractor {
    fft: Arc<dyn Fft<f64>>,
    peak_threshold: Option<f64>,
}

impl Default for EdaFeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl EdaFeatureExtractor {
    pub fn new() -> Self {
        Self {
            fft: FftPlanner::new().plan_fft_forward(WINDOW_SAMPLES),
            peak_threshold: None,
        }
    }

    /// Only count peaks whose amplitude reaches `thr` (off by default;
    /// the plain local-maximum definition is the reference behavior).
    pub fn with_peak_threshold(mut self, thr: f64) -> Self {
        self.peak_threshold = Some(thr);
        self
    }

    pub fn extract(&self, w: &Window) -> FeatureVector {
        let mut values = Vec::with_capacity(45);
        let mut buf = vec![Complex64::new(0.0, 0.0); WINDOW_SAMPLES];
        for c in ALL_CHANNELS {
            let x = w.channel(c);
            self.channel_features(x, &mut buf, &mut values);
        }
        FeatureVector { layout: FeatureSet::EdaSpecific, values }
    }

    fn channel_features(&self, x: &[f64], buf: &mut [Complex64], out: &mut Vec<f64>) {
        let n = x.len();
        let (mean, std) = mean_std(x);
        let (min, max) = min_max(x);
        let slope = (x[n - 1] - x[0]) / (n as f64 - 1.0);

        // First differences.
        let mut dsum = 0.0;
        for i in 0..n - 1 {
            dsum += x[i + 1] - x[i];
        }
        let dmean = dsum / (n as f64 - 1.0);
        let mut dvar = 0.0;
        for i in 0..n - 1 {
            let d = (x[i + 1] - x[i]) - dmean;
            dvar += d * d;
        }
        let dstd = (dvar / (n as f64 - 2.0)).sqrt();

        // Strict interior local maxima.
        let mut peak_count = 0usize;
        let mut peak_sum = 0.0;
        for i in 1..n - 1 {
            if x[i - 1] < x[i] && x[i] > x[i + 1] {
                if let Some(thr) = self.peak_threshold {
                    if x[i] < thr {
                        continue;
                    }
                }
                peak_count += 1;
                peak_sum += x[i];
            }
        }
        let peak_amp = if peak_count > 0 { peak_sum / peak_count as f64 } else { 0.0 };

        // Spectrum.
        for (b, v) in buf.iter_mut().zip(x) {
            *b = Complex64::new(*v, 0.0);
        }
        self.fft.process(buf);
        let max_abs = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = n as f64 * f64::EPSILON * max_abs;
        let dc = buf[0].re;
        let mut abs_sum = 0.0;
        let mut energy = 0.0;
        let mut powers = Vec::with_capacity(n - 1);
        for b in buf.iter().take(n).skip(1) {
            let mag = b.norm();
            let mag = if mag <= floor { 0.0 } else { mag };
            abs_sum += mag;
            let p = mag * mag;
            energy += p;
            powers.push(p);
        }
        let entropy = if energy > 0.0 {
            -powers
                .iter()
                .filter(|p| **p > 0.0)
                .map(|p| {
                    let q = p / energy;
                    q * q.log2()
                })
                .sum::<f64>()
        } else {
            0.0
        };

        out.extend_from_slice(&[
            mean,
            min,
            max,
            std,
            max - min,
            slope,
            slope.abs(),
            dmean,
            dstd,
            peak_count as f64,
            peak_amp,
            dc,
            abs_sum,
            entropy,
            energy,
        ]);
    }
}

/// Convenience wrapper constructing a fresh extractor.
pub fn eda_features(w: &Window) -> FeatureVector {
    EdaFeatureExtractor::new().extract(w)
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}
