//! `edakit preprocess` — low-pass filter and decompose every archived
//! recording, with an on-disk decomposition cache.

use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use edakit::decompose::cache::DecompositionCache;
use edakit::decompose::{decompose_recording, CvxedaParams};
use edakit::ingest::{load_recording, ArchiveManifest};
use edakit::signal::{butterworth_lowpass, Series};

use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct PreprocessArgs {
    /// Archive directory (from `edakit ingest`).
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Low-pass cutoff in Hz.
    #[arg(long)]
    cutoff_hz: Option<f64>,
    /// Filter order.
    #[arg(long)]
    order: Option<usize>,
    /// Skip the decomposition cache.
    #[arg(long)]
    no_cache: bool,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    knot_spacing: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    solver_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct PreprocessConfig {
    archive: Option<PathBuf>,
    cutoff_hz: Option<f64>,
    order: Option<usize>,
    use_cache: Option<bool>,
    tau0: Option<f64>,
    tau1: Option<f64>,
    knot_spacing: Option<f64>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    solver_tol: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    archive: PathBuf,
    cutoff_hz: f64,
    order: usize,
    use_cache: bool,
    cvxeda: CvxedaParams,
}

pub fn run(args: PreprocessArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: PreprocessConfig = load_section(config, "preprocess")?.unwrap_or_default();
    let archive = args
        .archive
        .or(file.archive)
        .ok_or_else(|| CliError::data("preprocess: --archive is required"))?;
    let cutoff = pick(args.cutoff_hz, file.cutoff_hz, 0.4);
    let order = pick(args.order, file.order, 4);
    let use_cache = if args.no_cache { false } else { file.use_cache.unwrap_or(true) };

    let defaults = CvxedaParams::default();
    let params = CvxedaParams {
        tau0_s: pick(args.tau0, file.tau0, defaults.tau0_s),
        tau1_s: pick(args.tau1, file.tau1, defaults.tau1_s),
        knot_spacing_s: pick(args.knot_spacing, file.knot_spacing, defaults.knot_spacing_s),
        alpha: pick(args.alpha, file.alpha, defaults.alpha),
        gamma: pick(args.gamma, file.gamma, defaults.gamma),
        solver_tol: pick(args.solver_tol, file.solver_tol, defaults.solver_tol),
        max_iter: pick(args.max_iter, file.max_iter, defaults.max_iter),
    };
    params.validate()?;

    let manifest = ArchiveManifest::load(&archive.join("manifest.jsonl"))?;
    let dec_dir = archive.join("decompositions");
    std::fs::create_dir_all(&dec_dir)?;
    let cache = DecompositionCache::new(&dec_dir)?;

    let results: Result<Vec<(String, usize)>, CliError> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let rec = load_recording(&archive, entry)?;
            let filtered = butterworth_lowpass(&rec.to_series(), cutoff, order)?;
            if use_cache {
                if let Some(_hit) = cache.load(&filtered, &params)? {
                    return Ok((entry.path.clone(), 0));
                }
            }
            let dec = decompose_recording(&filtered, &params)?;
            cache.store(&filtered, &params, &dec)?;
            // Record the cache key so later stages can find it.
            let key = DecompositionCache::key(&filtered, &params);
            let key_path = archive.join(&entry.path).with_extension("dec-key");
            std::fs::write(&key_path, key)?;
            Ok((entry.path.clone(), dec.len()))
        })
        .collect();
    let results = results?;
    let fresh = results.iter().filter(|(_, n)| *n > 0).count();

    persist_resolved(
        &archive,
        "preprocess",
        &Resolved { archive: archive.clone(), cutoff_hz: cutoff, order, use_cache, cvxeda: params },
    )?;

    println!(
        "preprocessed {} recordings ({} fresh, {} cached)",
        results.len(),
        fresh,
        results.len() - fresh
    );
    Ok(())
}

/// Recover the decomposition of one archived recording, filtering and
/// solving again only when the cache misses.
pub fn decomposition_for(
    archive: &Path,
    entry: &edakit::ingest::ArchiveEntry,
    cutoff: f64,
    order: usize,
    params: &CvxedaParams,
) -> Result<(edakit::decompose::Decomposition, Series), CliError> {
    let rec = load_recording(archive, entry)?;
    let filtered = butterworth_lowpass(&rec.to_series(), cutoff, order)?;
    let cache = DecompositionCache::new(archive.join("decompositions"))?;
    if let Some(dec) = cache.load(&filtered, params)? {
        return Ok((dec, filtered));
    }
    let dec = decompose_recording(&filtered, params)?;
    cache.store(&filtered, params, &dec)?;
    Ok((dec, filtered))
}
