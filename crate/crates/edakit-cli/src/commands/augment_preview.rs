//! `edakit augment-preview` — one application of every augmentation
//! kind on a window, as before/after CSV.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::augment::{apply, sample_spec};
use edakit::rng::stream_rng;
use edakit::segment::shard::read_shard;
use edakit::segment::{Window, ALL_CHANNELS, WINDOW_SAMPLES};
use edakit::synth::{synth_window, SynthParams};

use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct AugmentPreviewArgs {
    /// Source shard; omit to preview on a synthetic window.
    #[arg(long)]
    shard: Option<PathBuf>,
    /// Window index within the shard.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct PreviewConfig {
    shard: Option<PathBuf>,
    index: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    shard: Option<PathBuf>,
    index: usize,
    seed: u64,
    out: PathBuf,
}

pub fn run(args: AugmentPreviewArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: PreviewConfig = load_section(config, "augment-preview")?.unwrap_or_default();
    let shard = args.shard.or(file.shard);
    let index = pick(args.index, file.index, 0);
    let seed = pick(args.seed, file.seed, 0);
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("augment-preview: --out is required"))?;

    let window: Window = match &shard {
        Some(p) => {
            let windows = read_shard(p)?;
            windows
                .get(index)
                .cloned()
                .ok_or_else(|| {
                    CliError::data(format!("index {index} outside shard of {}", windows.len()))
                })?
        }
        None => synth_window(&SynthParams::default(), "preview", "synthetic", 0.0, seed),
    };

    // One sampled application per kind: draw specs until every kind
    // has appeared once (uniform sampler, seeded).
    let mut rng = stream_rng(seed, 7);
    let mut by_kind = std::collections::BTreeMap::new();
    while by_kind.len() < edakit::augment::ALL_KINDS.len() {
        let spec = sample_spec(&mut rng);
        by_kind.entry(format!("{:?}", spec.kind)).or_insert(spec);
    }

    let mut csv = std::io::BufWriter::new(std::fs::File::create(&out)?);
    writeln!(csv, "kind,channel,sample,before,after")?;
    for (name, spec) in &by_kind {
        let view = apply(&window, spec)?;
        for c in ALL_CHANNELS {
            let before = window.channel(c);
            let after = view.channel(c);
            for i in 0..WINDOW_SAMPLES {
                writeln!(csv, "{name},{c:?},{i},{},{}", before[i], after[i])?;
            }
        }
    }
    csv.flush()?;

    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    persist_resolved(
        &out_dir,
        "augment-preview",
        &Resolved { shard, index, seed, out: out.clone() },
    )?;
    println!("wrote augmentation preview to {}", out.display());
    Ok(())
}
