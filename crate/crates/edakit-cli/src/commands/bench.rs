//! `edakit bench` — CPU-time comparison of the feature extractors plus
//! analytic FLOPs for the encoder.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::bench::{count_flops, time_extractor, write_bench_csv, BenchEntry, TIMED_RUNS, WARMUP_RUNS};
use edakit::decompose::{cvxeda, CvxedaParams};
use edakit::encoder::{batch_from_windows, Encoder, EncoderConfig};
use edakit::features::{generic_features, EdaFeatureExtractor};
use edakit::segment::Channel;
use edakit::signal::Series;
use edakit::synth::{synth_window, SynthParams};

use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shards to draw timing windows from; synthetic windows are used
    /// when omitted.
    #[arg(long, num_args = 0..)]
    shards: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also time the convex decomposition as its own row.
    #[arg(long)]
    with_decomposition: bool,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct BenchConfig {
    out: Option<PathBuf>,
    shards: Option<Vec<PathBuf>>,
    seed: Option<u64>,
    with_decomposition: Option<bool>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    out: PathBuf,
    shards: Vec<PathBuf>,
    seed: u64,
    with_decomposition: bool,
    warmup_runs: usize,
    timed_runs: usize,
}

pub fn run(args: BenchArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: BenchConfig = load_section(config, "bench")?.unwrap_or_default();
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("bench: --out is required"))?;
    let shards = if args.shards.is_empty() {
        file.shards.unwrap_or_default()
    } else {
        args.shards
    };
    let seed = pick(args.seed, file.seed, 0);
    let with_dec = args.with_decomposition || file.with_decomposition.unwrap_or(false);

    let needed = WARMUP_RUNS + TIMED_RUNS;
    let windows = if shards.is_empty() {
        (0..needed)
            .map(|i| {
                synth_window(&SynthParams::default(), "bench", "synthetic", i as f64, seed + i as u64)
            })
            .collect()
    } else {
        super::read_shards(&shards)?
    };

    let mut entries: Vec<BenchEntry> = Vec::new();

    entries.push(time_extractor(
        "generic_hc",
        |w| {
            std::hint::black_box(generic_features(w));
        },
        &windows,
        None,
    )?);

    let eda_ex = EdaFeatureExtractor::new();
    entries.push(time_extractor(
        "eda_specific_hc",
        |w| {
            std::hint::black_box(eda_ex.extract(w));
        },
        &windows,
        None,
    )?);

    let cfg = EncoderConfig::reference();
    let flops = count_flops(&cfg);
    let mut enc = Encoder::<f32>::new(cfg, seed)?;
    entries.push(time_extractor(
        "encoder_reference",
        |w| {
            let x = batch_from_windows(&[w]);
            std::hint::black_box(enc.forward_eval(&x).expect("bench forward"));
        },
        &windows,
        Some(flops as f64 / 1e9),
    )?);

    if with_dec {
        let params = CvxedaParams::default();
        entries.push(time_extractor(
            "cvxeda_decomposition",
            |w| {
                let s = Series::new(w.channel(Channel::Original).to_vec()).expect("finite");
                std::hint::black_box(cvxeda(&s, &params).expect("decomposition"));
            },
            &windows,
            None,
        )?);
    }

    std::fs::create_dir_all(&out)?;
    write_bench_csv(&out.join("bench.csv"), &entries)?;
    persist_resolved(
        &out,
        "bench",
        &Resolved {
            out: out.clone(),
            shards,
            seed,
            with_decomposition: with_dec,
            warmup_runs: WARMUP_RUNS,
            timed_runs: TIMED_RUNS,
        },
    )?;

    for e in &entries {
        println!(
            "{:24} {:>12.4} ms +/- {:>8.4}{}",
            e.name,
            e.mean_ms,
            e.se_ms,
            e.gflops.map_or(String::new(), |g| format!("  ({g:.4} GFLOP/window)"))
        );
    }
    Ok(())
}
