//! `edakit embed` — frozen-encoder embeddings for window shards.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::encoder::checkpoint::load_checkpoint;
use edakit::encoder::embed_windows;
use edakit::features::io::write_feature_csv;
use edakit::segment::WindowMeta;

use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct EmbedArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    shards: Vec<PathBuf>,
    /// Output feature CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct EmbedConfig {
    checkpoint: Option<PathBuf>,
    shards: Option<Vec<PathBuf>>,
    out: Option<PathBuf>,
    batch_size: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    checkpoint: PathBuf,
    shards: Vec<PathBuf>,
    out: PathBuf,
    batch_size: usize,
    embedding_dim: usize,
}

pub fn run(args: EmbedArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: EmbedConfig = load_section(config, "embed")?.unwrap_or_default();
    let checkpoint = args
        .checkpoint
        .or(file.checkpoint)
        .ok_or_else(|| CliError::data("embed: --checkpoint is required"))?;
    let shards = if args.shards.is_empty() {
        file.shards.unwrap_or_default()
    } else {
        args.shards
    };
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("embed: --out is required"))?;
    let batch_size = pick(args.batch_size, file.batch_size, 256);

    let windows = super::read_shards(&shards)?;
    let mut enc = load_checkpoint(&checkpoint)?;
    let dim = enc.config.embedding_dim;
    let embeddings = embed_windows(&mut enc, &windows, batch_size)?;

    let metas: Vec<WindowMeta> = windows.iter().map(WindowMeta::from).collect();
    let rows: Vec<Vec<f64>> = embeddings
        .iter()
        .map(|e| e.iter().map(|v| *v as f64).collect())
        .collect();
    let names: Vec<String> = (0..dim).map(|i| format!("emb_{i:02}")).collect();
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_feature_csv(&out, &metas, &rows, &names)?;

    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    persist_resolved(
        &out_dir,
        "embed",
        &Resolved {
            checkpoint,
            shards,
            out: out.clone(),
            batch_size,
            embedding_dim: dim,
        },
    )?;
    println!("wrote {} embeddings of dim {dim} to {}", rows.len(), out.display());
    Ok(())
}
