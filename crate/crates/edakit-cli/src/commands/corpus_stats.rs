//! `edakit corpus-stats` — per-dataset hours, user counts and value
//! histograms of an archive (plot-ready CSV).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::ingest::{load_recording, ArchiveManifest};

use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct CorpusStatsArgs {
    #[arg(long)]
    archive: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Histogram bin width in microsiemens.
    #[arg(long)]
    bin_width: Option<f64>,
    /// Truncate the histogram at this value (0 disables truncation).
    #[arg(long)]
    truncate_at: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct StatsConfig {
    archive: Option<PathBuf>,
    out: Option<PathBuf>,
    bin_width: Option<f64>,
    truncate_at: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    archive: PathBuf,
    out: PathBuf,
    bin_width: f64,
    truncate_at: f64,
}

pub fn run(args: CorpusStatsArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: StatsConfig = load_section(config, "corpus-stats")?.unwrap_or_default();
    let archive = args
        .archive
        .or(file.archive)
        .ok_or_else(|| CliError::data("corpus-stats: --archive is required"))?;
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("corpus-stats: --out is required"))?;
    let bin_width = pick(args.bin_width, file.bin_width, 0.05);
    let truncate_at = pick(args.truncate_at, file.truncate_at, 2.5);
    if bin_width <= 0.0 {
        return Err(CliError::data("bin width must be positive"));
    }

    let manifest = ArchiveManifest::load(&archive.join("manifest.jsonl"))?;

    #[derive(Default)]
    struct DatasetAgg {
        seconds: f64,
        users: std::collections::BTreeSet<String>,
        hist: Vec<u64>,
        overflow: u64,
    }
    let n_bins = if truncate_at > 0.0 {
        (truncate_at / bin_width).ceil() as usize
    } else {
        (100.0 / bin_width).ceil() as usize // E4 ceiling
    };

    let mut agg: BTreeMap<String, DatasetAgg> = BTreeMap::new();
    for entry in &manifest.entries {
        let rec = load_recording(&archive, entry)?;
        let a = agg.entry(entry.dataset_id.clone()).or_default();
        if a.hist.is_empty() {
            a.hist = vec![0; n_bins];
        }
        a.seconds += entry.duration_s;
        a.users.insert(entry.user_id.clone());
        for v in &rec.values {
            let bin = (*v as f64 / bin_width).floor();
            if bin < 0.0 {
                continue;
            }
            let bin = bin as usize;
            if bin < n_bins {
                a.hist[bin] += 1;
            } else {
                a.overflow += 1;
            }
        }
    }

    std::fs::create_dir_all(&out)?;
    let mut summary = std::io::BufWriter::new(std::fs::File::create(out.join("summary.csv"))?);
    writeln!(summary, "dataset,hours,users,recordings")?;
    for (ds, a) in &agg {
        let recs = manifest.entries.iter().filter(|e| &e.dataset_id == ds).count();
        writeln!(summary, "{ds},{},{},{recs}", a.seconds / 3600.0, a.users.len())?;
    }
    summary.flush()?;

    let mut hist = std::io::BufWriter::new(std::fs::File::create(out.join("histogram.csv"))?);
    writeln!(hist, "dataset,bin_lo_us,bin_hi_us,count")?;
    for (ds, a) in &agg {
        for (b, count) in a.hist.iter().enumerate() {
            writeln!(
                hist,
                "{ds},{},{},{count}",
                b as f64 * bin_width,
                (b + 1) as f64 * bin_width
            )?;
        }
        if a.overflow > 0 {
            writeln!(hist, "{ds},{},inf,{}", n_bins as f64 * bin_width, a.overflow)?;
        }
    }
    hist.flush()?;

    persist_resolved(
        &out,
        "corpus-stats",
        &Resolved { archive, out: out.clone(), bin_width, truncate_at },
    )?;
    println!("wrote corpus stats for {} datasets to {}", agg.len(), out.display());
    Ok(())
}
