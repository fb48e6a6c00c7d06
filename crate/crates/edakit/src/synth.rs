//! Seeded synthetic EDA generators for benches, smoke training and the
//! test suites.
//!
//! A synthetic trace is a smooth tonic baseline plus a train of
//! bi-exponential (Bateman) pulses and white noise. Windows carry the
//! usual three channels with `original = tonic + phasic + noise`.

use std::sync::Arc;

use rand::Rng;

use crate::augment::warp::knot_curve;
use crate::rng::{normal, stream_rng};
use crate::segment::{Window, WINDOW_SAMPLES};
use crate::signal::RATE_HZ;

/// Generator parameters for one window.
#[derive(Debug, Clone)]
pub struct SynthParams {
    /// Expected pulses per minute.
    pub pulse_rate_per_min: f64,
    /// Pulse amplitude range (uniform), microsiemens.
    pub pulse_amp: (f64, f64),
    /// Tonic baseline range (uniform), microsiemens.
    pub tonic_level: (f64, f64),
    /// White measurement noise standard deviation.
    pub noise_sigma: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            pulse_rate_per_min: 3.0,
            pulse_amp: (0.2, 0.6),
            tonic_level: (0.5, 1.5),
            noise_sigma: 0.01,
        }
    }
}

/// Sampled bi-exponential kernel, unit peak.
pub fn bateman_kernel(tau0: f64, tau1: f64, len: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / RATE_HZ;
            (-t / tau0).exp() - (-t / tau1).exp()
        })
        .collect();
    let peak = k.iter().cloned().fold(f64::MIN, f64::max).max(1e-12);
    for v in &mut k {
        *v /= peak;
    }
    k
}

/// One synthetic 60 s window.
pub fn synth_window(
    params: &SynthParams,
    user_id: &str,
    dataset_id: &str,
    t_start: f64,
    seed: u64,
) -> Window {
    let mut rng = stream_rng(seed, 0xEDA);
    let n = WINDOW_SAMPLES;
    let kernel = bateman_kernel(2.0, 0.7, 60);

    // Tonic: level plus a slow multiplicative wobble.
    let level = rng.random_range(params.tonic_level.0..=params.tonic_level.1);
    let knots = [
        1.0 + 0.05 * normal(&mut rng),
        1.0 + 0.05 * normal(&mut rng),
        1.0 + 0.05 * normal(&mut rng),
        1.0 + 0.05 * normal(&mut rng),
    ];
    let wobble = knot_curve(&knots, n);
    let tonic: Vec<f64> = wobble.iter().map(|w| (level * w).max(0.0)).collect();

    // Phasic: Poisson pulse train convolved with the kernel.
    let mut phasic = vec![0.0; n];
    let p_pulse = params.pulse_rate_per_min / 60.0 / RATE_HZ;
    for onset in 0..n {
        if rng.random::<f64>() < p_pulse {
            let amp = rng.random_range(params.pulse_amp.0..=params.pulse_amp.1);
            for (k, kv) in kernel.iter().enumerate() {
                if onset + k < n {
                    phasic[onset + k] += amp * kv;
                }
            }
        }
    }

    let mut channels = Vec::with_capacity(3 * n);
    for i in 0..n {
        let noise = params.noise_sigma * normal(&mut rng);
        channels.push((tonic[i] + phasic[i] + noise).max(0.0));
    }
    channels.extend_from_slice(&phasic);
    channels.extend_from_slice(&tonic);
    Window::new(channels, Arc::from(user_id), Arc::from(dataset_id), t_start)
}

/// A labeled two-class corpus: class 1 has three times the pulse rate
/// of class 0. Windows alternate classes and spread over `users`.
pub fn two_class_windows(n: usize, users: usize, seed: u64) -> Vec<Window> {
    (0..n)
        .map(|i| {
            let class1 = i % 2 == 1;
            let params = SynthParams {
                pulse_rate_per_min: if class1 { 9.0 } else { 3.0 },
                ..SynthParams::default()
            };
            let user = format!("synth-u{:02}", i % users);
            let mut w = synth_window(
                &params,
                &user,
                "synth",
                (i / users) as f64 * 60.0,
                seed.wrapping_add(i as u64),
            );
            w.label = Some(class1);
            w
        })
        .collect()
}

/// A synthetic continuous series for decomposition tests: tonic spline
/// plus `pulses` Bateman pulses plus noise.
pub fn synth_series(len: usize, pulses: usize, noise_sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0x5E1);
    let kernel = bateman_kernel(2.0, 0.7, 60);
    let level = rng.random_range(0.8..1.6);
    let knots = [
        1.0 + 0.1 * normal(&mut rng),
        1.0 + 0.1 * normal(&mut rng),
        1.0 + 0.1 * normal(&mut rng),
        1.0 + 0.1 * normal(&mut rng),
    ];
    let wobble = knot_curve(&knots, len);
    let mut y: Vec<f64> = wobble.iter().map(|w| level * w).collect();
    for _ in 0..pulses {
        let onset = rng.random_range(0..len.saturating_sub(10));
        let amp = rng.random_range(0.3..0.8);
        for (k, kv) in kernel.iter().enumerate() {
            if onset + k < len {
                y[onset + k] += amp * kv;
            }
        }
    }
    for v in &mut y {
        *v = (*v + noise_sigma * normal(&mut rng)).max(0.0);
    }
    y
}
