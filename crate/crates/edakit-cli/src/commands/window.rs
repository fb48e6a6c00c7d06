//! `edakit window` — cut decomposed recordings into window shards.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::decompose::CvxedaParams;
use edakit::ingest::{ArchiveManifest, Side};
use edakit::segment::shard::write_shard;
use edakit::segment::{attach_labels, make_windows, LabelInterval, RecordingMeta, Window};

use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct WindowArgs {
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Output shard file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Window step in samples (240 = non-overlapping, 1 = maximum
    /// overlap).
    #[arg(long)]
    step: Option<usize>,
    /// JSONL label intervals {dataset_id, user_id, t0, t1, label}.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Keep only recordings from this body side (left|right).
    #[arg(long)]
    side: Option<String>,
    /// Filter parameters must match the preprocess run.
    #[arg(long)]
    cutoff_hz: Option<f64>,
    #[arg(long)]
    order: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct WindowConfig {
    archive: Option<PathBuf>,
    out: Option<PathBuf>,
    step: Option<usize>,
    labels: Option<PathBuf>,
    side: Option<String>,
    cutoff_hz: Option<f64>,
    order: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    archive: PathBuf,
    out: PathBuf,
    step: usize,
    labels: Option<PathBuf>,
    side: Option<String>,
    cutoff_hz: f64,
    order: usize,
}

#[derive(Debug, Serialize)]
struct WindowStats {
    windows: usize,
    labeled: usize,
    recordings: usize,
    too_short: usize,
    side_filtered: usize,
}

fn parse_side(s: &str) -> Result<Side, CliError> {
    match s {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        other => Err(CliError::data(format!("bad side {other:?} (left|right)"))),
    }
}

pub fn run(args: WindowArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: WindowConfig = load_section(config, "window")?.unwrap_or_default();
    let archive = args
        .archive
        .or(file.archive)
        .ok_or_else(|| CliError::data("window: --archive is required"))?;
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("window: --out is required"))?;
    let step = pick(args.step, file.step, 240);
    let labels_path = args.labels.or(file.labels);
    let side = args.side.or(file.side);
    let cutoff = pick(args.cutoff_hz, file.cutoff_hz, 0.4);
    let order = pick(args.order, file.order, 4);
    let wanted_side = side.as_deref().map(parse_side).transpose()?;

    let intervals: Option<Vec<LabelInterval>> = match &labels_path {
        None => None,
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let mut v = Vec::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                v.push(serde_json::from_str(line)?);
            }
            Some(v)
        }
    };

    let manifest = ArchiveManifest::load(&archive.join("manifest.jsonl"))?;
    let params = CvxedaParams::default();
    let mut all_windows: Vec<Window> = Vec::new();
    let mut stats = WindowStats {
        windows: 0,
        labeled: 0,
        recordings: 0,
        too_short: 0,
        side_filtered: 0,
    };

    for entry in &manifest.entries {
        if let Some(w) = wanted_side {
            if entry.side != w {
                stats.side_filtered += 1;
                continue;
            }
        }
        stats.recordings += 1;
        let (dec, _) =
            super::preprocess::decomposition_for(&archive, entry, cutoff, order, &params)?;
        let meta = RecordingMeta {
            user_id: Arc::from(entry.user_id.as_str()),
            dataset_id: Arc::from(entry.dataset_id.as_str()),
            start_unix: entry.start_unix,
        };
        let iter = make_windows(&dec, step, &meta)?;
        let produced: Vec<Window> = match &intervals {
            None => iter.collect(),
            Some(iv) => attach_labels(iter, iv)?,
        };
        if produced.is_empty() && dec.len() < edakit::segment::WINDOW_SAMPLES {
            stats.too_short += 1;
        }
        all_windows.extend(produced);
    }

    stats.windows = all_windows.len();
    stats.labeled = all_windows.iter().filter(|w| w.label.is_some()).count();

    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_shard(&out, &all_windows)?;
    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    persist_resolved(
        &out_dir,
        "window",
        &Resolved {
            archive,
            out: out.clone(),
            step,
            labels: labels_path,
            side,
            cutoff_hz: cutoff,
            order,
        },
    )?;
    std::fs::write(
        out.with_extension("stats.json"),
        serde_json::to_vec_pretty(&stats)?,
    )?;

    println!(
        "wrote {} windows ({} labeled) from {} recordings to {}",
        stats.windows,
        stats.labeled,
        stats.recordings,
        out.display()
    );
    Ok(())
}
