//! Computational-cost accounting: analytic FLOP counts for the encoder
//! and a CPU-time harness for feature extractors.
//!
//! Conventions: one multiply-accumulate counts as 2 FLOPs; pooling and
//! elementwise ops (normalization, activations, gates, residual adds)
//! count 1 FLOP per element; dropout at inference is free. Timing
//! follows a fixed protocol of 3 warm-up runs plus 20 timed runs on
//! distinct windows, each covering all three channels of one 60 s
//! window, strictly serial.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::encoder::{layer_plan, EncoderConfig, PlanOp};
use crate::segment::Window;

pub const WARMUP_RUNS: usize = 3;
pub const TIMED_RUNS: usize = 20;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("need at least {needed} windows (warm-up + timed), got {got}")]
    InsufficientWindows { needed: usize, got: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// FLOPs of one plan op (per sample).
pub fn op_flops(op: &PlanOp) -> u64 {
    match *op {
        PlanOp::Conv { out_len, out_ch, in_ch_per_group, kernel } => {
            2 * (out_len * out_ch * in_ch_per_group * kernel) as u64
        }
        PlanOp::Linear { inf, outf } => 2 * (inf * outf) as u64,
        PlanOp::Elementwise { n } | PlanOp::Pool { n } => n as u64,
    }
}

/// Analytic FLOPs of one encoder forward pass on a single window.
pub fn count_flops(cfg: &EncoderConfig) -> u64 {
    layer_plan(cfg).iter().map(|(_, op)| op_flops(op)).sum()
}

/// One timed extractor row.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BenchEntry {
    pub name: String,
    pub mean_ms: f64,
    pub se_ms: f64,
    pub n_samples: usize,
    pub n_warmup: usize,
    /// Model extractors report their analytic GFLOPs per window.
    pub gflops: Option<f64>,
}

/// Time an extractor: 3 warm-up runs then 20 timed runs, one window
/// each, strictly serial. Mean and standard error are over the 20
/// timed runs.
pub fn time_extractor(
    name: &str,
    mut extractor: impl FnMut(&Window),
    windows: &[Window],
    gflops: Option<f64>,
) -> Result<BenchEntry, BenchError> {
    let needed = WARMUP_RUNS + TIMED_RUNS;
    if windows.len() < needed {
        return Err(BenchError::InsufficientWindows { needed, got: windows.len() });
    }
    for w in &windows[..WARMUP_RUNS] {
        extractor(w);
    }
    let mut times_ms = Vec::with_capacity(TIMED_RUNS);
    for w in &windows[WARMUP_RUNS..needed] {
        let t0 = Instant::now();
        extractor(w);
        times_ms.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    let (mean, se) = crate::eval::mean_se(&times_ms);
    Ok(BenchEntry {
        name: name.to_string(),
        mean_ms: mean,
        se_ms: se,
        n_samples: TIMED_RUNS,
        n_warmup: WARMUP_RUNS,
        gflops,
    })
}

/// CSV mirroring the extractor-comparison layout.
pub fn write_bench_csv(path: &Path, entries: &[BenchEntry]) -> Result<(), BenchError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "extractor,cpu_time_mean_ms,cpu_time_se_ms,n_samples,n_warmup,gflops")?;
    for e in entries {
        let gf = e.gflops.map_or(String::new(), |g| format!("{g}"));
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.name, e.mean_ms, e.se_ms, e.n_samples, e.n_warmup, gf
        )?;
    }
    out.flush()?;
    Ok(())
}
