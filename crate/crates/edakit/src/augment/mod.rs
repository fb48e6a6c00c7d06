//! Stochastic window augmentations and the contrastive pair sampler.
//!
//! Eighteen transform kinds: four zero-phase frequency filters, high
//! frequency noise, two artifact simulations (jump, loose sensor), two
//! tonic-channel modulations, and generic time-series transforms
//! (scaling, warps, noise, shift, cutout, permutation, flip, identity).
//!
//! Generic and artifact transforms apply the same sampled parameters to
//! all three channels; `TonicScale`/`TonicWarp` modify the tonic
//! channel and reset `original := phasic + tonic`; the filters run per
//! channel with the same cutoffs. Every transform is deterministic
//! given its [`AugmentationSpec`] (noise draws come from the embedded
//! seed), so recorded specs reproduce views exactly.

pub(crate) mod warp;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rng::normal;
use crate::segment::{Channel, Window, ALL_CHANNELS, WINDOW_SAMPLES};
use crate::signal::{design_butterworth, zero_phase, BandKind, RATE_HZ};

/// Parameter ranges (inclusive). Durations are in seconds, converted
/// to whole samples at 4 Hz.
pub mod ranges {
    pub const LOW_PASS_HZ: (f64, f64) = (0.25, 1.0);
    pub const HIGH_PASS_HZ: (f64, f64) = (0.05, 0.25);
    pub const BAND_PASS_HZ: (f64, f64) = (0.05, 0.25);
    pub const BAND_STOP_HZ: (f64, f64) = (0.75, 1.0);
    pub const HF_NOISE_SIGMA: (f64, f64) = (0.0, 0.5);
    pub const JUMP_US: (f64, f64) = (0.01, 0.2);
    pub const LOOSE_SENSOR_SAMPLES: (usize, usize) = (20, 80); // 5..20 s
    pub const TONIC_SCALE: (f64, f64) = (0.25, 2.0);
    pub const TONIC_WARP_SIGMA: (f64, f64) = (0.01, 0.05);
    pub const AMP_SCALE: (f64, f64) = (0.25, 2.0);
    pub const AMP_WARP_SIGMA: (f64, f64) = (0.01, 0.05);
    pub const GAUSS_SIGMA: (f64, f64) = (0.0, 0.5);
    pub const TIME_SHIFT_SAMPLES: (usize, usize) = (20, 180); // 5..45 s
    pub const CUTOUT_SAMPLES: (usize, usize) = (20, 60); // 5..15 s
    pub const TIME_WARP_SIGMA: (f64, f64) = (0.01, 0.1);
    pub const PERMUTATION_SEGMENTS: (usize, usize) = (2, 6);
}

/// The 18 augmentation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum AugKind {
    LowPass,
    HighPass,
    BandPass,
    BandStop,
    HfNoise,
    Jump,
    LooseSensor,
    TonicScale,
    TonicWarp,
    AmpScale,
    AmpWarp,
    GaussNoise,
    TimeShift,
    Cutout,
    TimeWarp,
    Permutation,
    Flip,
    Identity,
}

pub const ALL_KINDS: [AugKind; 18] = [
    AugKind::LowPass,
    AugKind::HighPass,
    AugKind::BandPass,
    AugKind::BandStop,
    AugKind::HfNoise,
    AugKind::Jump,
    AugKind::LooseSensor,
    AugKind::TonicScale,
    AugKind::TonicWarp,
    AugKind::AmpScale,
    AugKind::AmpWarp,
    AugKind::GaussNoise,
    AugKind::TimeShift,
    AugKind::Cutout,
    AugKind::TimeWarp,
    AugKind::Permutation,
    AugKind::Flip,
    AugKind::Identity,
];

/// Sampled parameters for one application.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum AugParams {
    LowPass { cutoff_hz: f64 },
    HighPass { cutoff_hz: f64 },
    /// Fixed information-rich pass band.
    BandPass,
    /// Fixed rejection band.
    BandStop,
    HfNoise { sigma: f64 },
    Jump { magnitude_us: f64, upward: bool, at: usize },
    LooseSensor { start: usize, len: usize },
    TonicScale { factor: f64 },
    TonicWarp { sigma: f64, knots: [f64; 4] },
    AmpScale { factor: f64 },
    AmpWarp { sigma: f64, knots: [f64; 4] },
    GaussNoise { sigma: f64 },
    TimeShift { samples: usize, forward: bool },
    Cutout { start: usize, len: usize },
    TimeWarp { sigma: f64, knots: [f64; 4] },
    Permutation { order: Vec<usize> },
    Flip,
    Identity,
}

impl AugParams {
    pub fn kind(&self) -> AugKind {
        match self {
            AugParams::LowPass { .. } => AugKind::LowPass,
            AugParams::HighPass { .. } => AugKind::HighPass,
            AugParams::BandPass => AugKind::BandPass,
            AugParams::BandStop => AugKind::BandStop,
            AugParams::HfNoise { .. } => AugKind::HfNoise,
            AugParams::Jump { .. } => AugKind::Jump,
            AugParams::LooseSensor { .. } => AugKind::LooseSensor,
            AugParams::TonicScale { .. } => AugKind::TonicScale,
            AugParams::TonicWarp { .. } => AugKind::TonicWarp,
            AugParams::AmpScale { .. } => AugKind::AmpScale,
            AugParams::AmpWarp { .. } => AugKind::AmpWarp,
            AugParams::GaussNoise { .. } => AugKind::GaussNoise,
            AugParams::TimeShift { .. } => AugKind::TimeShift,
            AugParams::Cutout { .. } => AugKind::Cutout,
            AugParams::TimeWarp { .. } => AugKind::TimeWarp,
            AugParams::Permutation { .. } => AugKind::Permutation,
            AugParams::Flip => AugKind::Flip,
            AugParams::Identity => AugKind::Identity,
        }
    }
}

/// One parameterized stochastic transform.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AugmentationSpec {
    pub kind: AugKind,
    pub params: AugParams,
    /// Seed for the transform's internal noise draws.
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("parameter out of range for {kind:?}: {msg}")]
    ParamOutOfRange { kind: AugKind, msg: String },
    #[error("kind/params mismatch: spec kind {kind:?}, params kind {params:?}")]
    KindMismatch { kind: AugKind, params: AugKind },
}

fn check_range(kind: AugKind, name: &str, v: f64, range: (f64, f64)) -> Result<(), AugmentError> {
    if !v.is_finite() || v < range.0 || v > range.1 {
        return Err(AugmentError::ParamOutOfRange {
            kind,
            msg: format!("{name}={v} not in [{}, {}]", range.0, range.1),
        });
    }
    Ok(())
}

fn check_span(
    kind: AugKind,
    start: usize,
    len: usize,
    len_range: (usize, usize),
) -> Result<(), AugmentError> {
    if len < len_range.0 || len > len_range.1 {
        return Err(AugmentError::ParamOutOfRange {
            kind,
            msg: format!("duration {len} samples not in [{}, {}]", len_range.0, len_range.1),
        });
    }
    if start + len > WINDOW_SAMPLES {
        return Err(AugmentError::ParamOutOfRange {
            kind,
            msg: format!("span {start}+{len} exceeds window"),
        });
    }
    Ok(())
}

/// Apply one augmentation, producing a new window. The input is never
/// modified; provenance and label carry over, the residual slice does
/// not (the additive split no longer holds after augmentation).
pub fn apply(w: &Window, spec: &AugmentationSpec) -> Result<Window, AugmentError> {
    if spec.params.kind() != spec.kind {
        return Err(AugmentError::KindMismatch {
            kind: spec.kind,
            params: spec.params.kind(),
        });
    }
    let mut out = w.clone();
    out.clear_residual();

    match &spec.params {
        AugParams::Identity => {}
        AugParams::LowPass { cutoff_hz } => {
            check_range(spec.kind, "cutoff", *cutoff_hz, ranges::LOW_PASS_HZ)?;
            filter_all(&mut out, BandKind::Low, &[*cutoff_hz]);
        }
        AugParams::HighPass { cutoff_hz } => {
            check_range(spec.kind, "cutoff", *cutoff_hz, ranges::HIGH_PASS_HZ)?;
            filter_all(&mut out, BandKind::High, &[*cutoff_hz]);
        }
        AugParams::BandPass => {
            filter_all(
                &mut out,
                BandKind::BandPass,
                &[ranges::BAND_PASS_HZ.0, ranges::BAND_PASS_HZ.1],
            );
        }
        AugParams::BandStop => {
            filter_all(
                &mut out,
                BandKind::BandStop,
                &[ranges::BAND_STOP_HZ.0, ranges::BAND_STOP_HZ.1],
            );
        }
        AugParams::HfNoise { sigma } => {
            check_range(spec.kind, "sigma", *sigma, ranges::HF_NOISE_SIGMA)?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let sos = design_butterworth(BandKind::High, &[1.0], 4, RATE_HZ).expect("fixed design");
            for c in ALL_CHANNELS {
                let noise: Vec<f64> =
                    (0..WINDOW_SAMPLES).map(|_| sigma * normal(&mut rng)).collect();
                let hf = zero_phase(&sos, &noise).expect("window length");
                for (v, n) in out.channel_mut(c).iter_mut().zip(&hf) {
                    *v += n;
                }
            }
        }
        AugParams::Jump { magnitude_us, upward, at } => {
            check_range(spec.kind, "magnitude", *magnitude_us, ranges::JUMP_US)?;
            if *at == 0 || *at >= WINDOW_SAMPLES {
                return Err(AugmentError::ParamOutOfRange {
                    kind: spec.kind,
                    msg: format!("jump index {at} outside 1..{WINDOW_SAMPLES}"),
                });
            }
            let delta = if *upward { *magnitude_us } else { -*magnitude_us };
            for c in ALL_CHANNELS {
                for v in &mut out.channel_mut(c)[*at..] {
                    *v += delta;
                }
            }
        }
        AugParams::LooseSensor { start, len } => {
            check_span(spec.kind, *start, *len, ranges::LOOSE_SENSOR_SAMPLES)?;
            for c in ALL_CHANNELS {
                for v in &mut out.channel_mut(c)[*start..start + len] {
                    *v = 0.0; // contact loss reads zero
                }
            }
        }
        AugParams::TonicScale { factor } => {
            check_range(spec.kind, "factor", *factor, ranges::TONIC_SCALE)?;
            for v in out.channel_mut(Channel::Tonic) {
                *v *= factor;
            }
            reset_original(&mut out);
        }
        AugParams::TonicWarp { sigma, knots } => {
            check_range(spec.kind, "sigma", *sigma, ranges::TONIC_WARP_SIGMA)?;
            let curve = warp::knot_curve(knots, WINDOW_SAMPLES);
            for (v, c) in out.channel_mut(Channel::Tonic).iter_mut().zip(&curve) {
                *v *= c;
            }
            reset_original(&mut out);
        }
        AugParams::AmpScale { factor } => {
            check_range(spec.kind, "factor", *factor, ranges::AMP_SCALE)?;
            for c in ALL_CHANNELS {
                for v in out.channel_mut(c) {
                    *v *= factor;
                }
            }
        }
        AugParams::AmpWarp { sigma, knots } => {
            check_range(spec.kind, "sigma", *sigma, ranges::AMP_WARP_SIGMA)?;
            let curve = warp::knot_curve(knots, WINDOW_SAMPLES);
            for c in ALL_CHANNELS {
                for (v, k) in out.channel_mut(c).iter_mut().zip(&curve) {
                    *v *= k;
                }
            }
        }
        AugParams::GaussNoise { sigma } => {
            check_range(spec.kind, "sigma", *sigma, ranges::GAUSS_SIGMA)?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            for c in ALL_CHANNELS {
                for v in out.channel_mut(c) {
                    *v += sigma * normal(&mut rng);
                }
            }
        }
        AugParams::TimeShift { samples, forward } => {
            let (lo, hi) = ranges::TIME_SHIFT_SAMPLES;
            if *samples < lo || *samples > hi {
                return Err(AugmentError::ParamOutOfRange {
                    kind: spec.kind,
                    msg: format!("shift {samples} samples not in [{lo}, {hi}]"),
                });
            }
            for c in ALL_CHANNELS {
                // Standalone windows have no longer context, so the
                // shift wraps circularly.
                if *forward {
                    out.channel_mut(c).rotate_right(*samples);
                } else {
                    out.channel_mut(c).rotate_left(*samples);
                }
            }
        }
        AugParams::Cutout { start, len } => {
            check_span(spec.kind, *start, *len, ranges::CUTOUT_SAMPLES)?;
            for c in ALL_CHANNELS {
                for v in &mut out.channel_mut(c)[*start..start + len] {
                    *v = 0.0;
                }
            }
        }
        AugParams::TimeWarp { sigma, knots } => {
            check_range(spec.kind, "sigma", *sigma, ranges::TIME_WARP_SIGMA)?;
            let pos = warp::monotone_positions(knots, WINDOW_SAMPLES);
            for c in ALL_CHANNELS {
                let src = out.channel(c).to_vec();
                for (i, v) in out.channel_mut(c).iter_mut().enumerate() {
                    *v = warp::lerp_at(&src, pos[i]);
                }
            }
        }
        AugParams::Permutation { order } => {
            let n = order.len();
            let (lo, hi) = ranges::PERMUTATION_SEGMENTS;
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if n < lo || n > hi || sorted != (0..n).collect::<Vec<_>>() {
                return Err(AugmentError::ParamOutOfRange {
                    kind: spec.kind,
                    msg: format!("order {order:?} is not a permutation of 0..n in [{lo}, {hi}]"),
                });
            }
            let bounds: Vec<usize> = (0..=n)
                .map(|k| (k * WINDOW_SAMPLES + n / 2) / n)
                .collect();
            for c in ALL_CHANNELS {
                let src = out.channel(c).to_vec();
                let dst = out.channel_mut(c);
                let mut at = 0;
                for &seg in order {
                    let (s, e) = (bounds[seg], bounds[seg + 1]);
                    dst[at..at + (e - s)].copy_from_slice(&src[s..e]);
                    at += e - s;
                }
            }
        }
        AugParams::Flip => {
            // Amplitude inversion. Negation is the one reflection that
            // is an exact involution in floating point.
            for c in ALL_CHANNELS {
                for v in out.channel_mut(c) {
                    *v = -*v;
                }
            }
        }
    }
    Ok(out)
}

fn filter_all(w: &mut Window, kind: BandKind, edges: &[f64]) {
    let sos = design_butterworth(kind, edges, 4, RATE_HZ).expect("validated edges");
    for c in ALL_CHANNELS {
        let filtered = zero_phase(&sos, w.channel(c)).expect("window length");
        w.channel_mut(c).copy_from_slice(&filtered);
    }
}

fn reset_original(w: &mut Window) {
    for i in 0..WINDOW_SAMPLES {
        let v = w.channel(Channel::Phasic)[i] + w.channel(Channel::Tonic)[i];
        w.channel_mut(Channel::Original)[i] = v;
    }
}

/// Draw one spec uniformly over the 18 kinds.
pub fn sample_spec<R: Rng + ?Sized>(rng: &mut R) -> AugmentationSpec {
    let kind = ALL_KINDS[rng.random_range(0..ALL_KINDS.len())];
    let seed: u64 = rng.random();
    let params = match kind {
        AugKind::LowPass => AugParams::LowPass {
            cutoff_hz: rng.random_range(ranges::LOW_PASS_HZ.0..=ranges::LOW_PASS_HZ.1),
        },
        AugKind::HighPass => AugParams::HighPass {
            cutoff_hz: rng.random_range(ranges::HIGH_PASS_HZ.0..=ranges::HIGH_PASS_HZ.1),
        },
        AugKind::BandPass => AugParams::BandPass,
        AugKind::BandStop => AugParams::BandStop,
        AugKind::HfNoise => AugParams::HfNoise {
            sigma: rng.random_range(ranges::HF_NOISE_SIGMA.0..=ranges::HF_NOISE_SIGMA.1),
        },
        AugKind::Jump => AugParams::Jump {
            magnitude_us: rng.random_range(ranges::JUMP_US.0..=ranges::JUMP_US.1),
            upward: rng.random(),
            at: rng.random_range(1..WINDOW_SAMPLES),
        },
        AugKind::LooseSensor => {
            let (lo, hi) = ranges::LOOSE_SENSOR_SAMPLES;
            let len = rng.random_range(lo..=hi);
            let start = rng.random_range(0..=WINDOW_SAMPLES - len);
            AugParams::LooseSensor { start, len }
        }
        AugKind::TonicScale => AugParams::TonicScale {
            factor: rng.random_range(ranges::TONIC_SCALE.0..=ranges::TONIC_SCALE.1),
        },
        AugKind::TonicWarp => {
            let sigma = rng.random_range(ranges::TONIC_WARP_SIGMA.0..=ranges::TONIC_WARP_SIGMA.1);
            AugParams::TonicWarp { sigma, knots: normal_knots(rng, sigma) }
        }
        AugKind::AmpScale => AugParams::AmpScale {
            factor: rng.random_range(ranges::AMP_SCALE.0..=ranges::AMP_SCALE.1),
        },
        AugKind::AmpWarp => {
            let sigma = rng.random_range(ranges::AMP_WARP_SIGMA.0..=ranges::AMP_WARP_SIGMA.1);
            AugParams::AmpWarp { sigma, knots: normal_knots(rng, sigma) }
        }
        AugKind::GaussNoise => AugParams::GaussNoise {
            sigma: rng.random_range(ranges::GAUSS_SIGMA.0..=ranges::GAUSS_SIGMA.1),
        },
        AugKind::TimeShift => {
            let (lo, hi) = ranges::TIME_SHIFT_SAMPLES;
            AugParams::TimeShift {
                samples: rng.random_range(lo..=hi),
                forward: rng.random(),
            }
        }
        AugKind::Cutout => {
            let (lo, hi) = ranges::CUTOUT_SAMPLES;
            let len = rng.random_range(lo..=hi);
            let start = rng.random_range(0..=WINDOW_SAMPLES - len);
            AugParams::Cutout { start, len }
        }
        AugKind::TimeWarp => {
            let sigma = rng.random_range(ranges::TIME_WARP_SIGMA.0..=ranges::TIME_WARP_SIGMA.1);
            AugParams::TimeWarp { sigma, knots: normal_knots(rng, sigma) }
        }
        AugKind::Permutation => {
            let (lo, hi) = ranges::PERMUTATION_SEGMENTS;
            let n = rng.random_range(lo..=hi);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            AugParams::Permutation { order }
        }
        AugKind::Flip => AugParams::Flip,
        AugKind::Identity => AugParams::Identity,
    };
    AugmentationSpec { kind, params, seed }
}

fn normal_knots<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> [f64; 4] {
    [
        1.0 + sigma * normal(rng),
        1.0 + sigma * normal(rng),
        1.0 + sigma * normal(rng),
        1.0 + sigma * normal(rng),
    ]
}

/// Two independently augmented views of the same anchor window.
pub fn sample_pair<R: Rng + ?Sized>(
    w: &Window,
    rng: &mut R,
) -> (Window, Window, (AugmentationSpec, AugmentationSpec)) {
    let s1 = sample_spec(rng);
    let s2 = sample_spec(rng);
    let v1 = apply(w, &s1).expect("sampled params are in range");
    let v2 = apply(w, &s2).expect("sampled params are in range");
    (v1, v2, (s1, s2))
}
