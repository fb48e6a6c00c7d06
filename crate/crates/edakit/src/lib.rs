//! # edakit — wearable electrodermal activity (EDA) toolkit
//!
//! End-to-end library for working with 4 Hz wrist-worn EDA recordings:
//!
//! * [`ingest`] — parse Empatica-E4-style session files into a unified
//!   binary archive with a line-delimited manifest.
//! * [`signal`] — zero-phase Butterworth filtering of conductance series.
//! * [`decompose`] — convex tonic/phasic decomposition (sparse-driver QP
//!   solved by an operator-splitting method).
//! * [`segment`] — 60 s / 240-sample three-channel windowing, label
//!   attachment and fixed-record window shards.
//! * [`augment`] — the 18 stochastic window augmentations used to build
//!   positive pairs for contrastive training.
//! * [`features`] — generic (12-dim) and EDA-specific (45-dim)
//!   handcrafted feature extraction.
//! * [`encoder`] — a 1D EfficientNet-style encoder (~1M parameters,
//!   64-dim embeddings) with hand-written reverse-mode gradients, plus a
//!   minimal masked-autoencoder network.
//! * [`train`] — InfoNCE and masked-reconstruction losses, AdamW,
//!   plateau scheduling, early stopping and the contrastive fit loop.
//! * [`probe`] — L2 logistic regression with balanced class weights and
//!   3-fold inner grid search (linear probing).
//! * [`eval`] — LOPO and time-aware cross-validation plans, metrics,
//!   dummy baselines, Friedman–Nemenyi and Bonferroni-corrected t-tests.
//! * [`bench`] — analytic FLOP accounting and CPU-time measurement for
//!   feature extractors.
//! * [`synth`] — seeded synthetic EDA generators used by the bench
//!   harness and the test suites.
//!
//! All signal processing runs in `f64`; only the encoder uses `f32`
//! weights. Every stochastic component is seeded through counter-based
//! RNG streams ([`rng`]) so that identical inputs and seeds reproduce
//! identical outputs bit-for-bit.

// Numeric kernels index loops on purpose; iterator rewrites would not
// make the stencil arithmetic clearer.
#![allow(clippy::needless_range_loop)]

pub mod augment;
pub mod bench;
pub mod decompose;
pub mod encoder;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod probe;
pub mod rng;
pub mod segment;
pub mod signal;
pub mod synth;
pub mod train;
