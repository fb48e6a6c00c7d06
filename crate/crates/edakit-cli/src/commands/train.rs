//! `edakit train` — contrastive training on window shards.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::encoder::checkpoint::save_checkpoint;
use edakit::encoder::{Encoder, EncoderConfig};
use edakit::train::{fit_contrastive, ContrastiveConfig};

use crate::config::{load_section, persist_resolved, pick};
use crate::error::CliError;

#[derive(Args)]
pub struct TrainArgs {
    /// Window shard files.
    #[arg(long, num_args = 1..)]
    shards: Vec<PathBuf>,
    /// Run directory for checkpoint, loss curves and resolved config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Encoder preset: `reference` or `tiny`.
    #[arg(long)]
    encoder: Option<String>,
    #[arg(long)]
    kernel_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct TrainFileConfig {
    shards: Option<Vec<PathBuf>>,
    out: Option<PathBuf>,
    encoder: Option<String>,
    kernel_size: Option<usize>,
    seed: Option<u64>,
    batch_size: Option<usize>,
    max_epochs: Option<usize>,
    lr: Option<f64>,
    weight_decay: Option<f64>,
    tau: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    shards: Vec<PathBuf>,
    out: PathBuf,
    encoder: String,
    encoder_config: EncoderConfig,
    contrastive: ContrastiveConfig,
}

pub fn run(args: TrainArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: TrainFileConfig = load_section(config, "train")?.unwrap_or_default();
    let shards = if args.shards.is_empty() {
        file.shards.unwrap_or_default()
    } else {
        args.shards
    };
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("train: --out is required"))?;
    let preset = args.encoder.or(file.encoder).unwrap_or_else(|| "reference".into());
    let mut enc_cfg = match preset.as_str() {
        "reference" => EncoderConfig::reference(),
        "tiny" => EncoderConfig::tiny(),
        other => return Err(CliError::data(format!("unknown encoder preset {other:?}"))),
    };
    if let Some(k) = args.kernel_size.or(file.kernel_size) {
        enc_cfg.kernel_size = k;
    }

    let defaults = ContrastiveConfig::default();
    let cfg = ContrastiveConfig {
        tau: pick(args.tau, file.tau, defaults.tau),
        batch_size: pick(args.batch_size, file.batch_size, defaults.batch_size),
        lr: pick(args.lr, file.lr, defaults.lr),
        weight_decay: pick(args.weight_decay, file.weight_decay, defaults.weight_decay),
        max_epochs: pick(args.max_epochs, file.max_epochs, defaults.max_epochs),
        seed: pick(args.seed, file.seed, defaults.seed),
        ..defaults
    };

    let windows = super::read_shards(&shards)?;
    std::fs::create_dir_all(&out)?;

    let mut enc = Encoder::<f32>::new(enc_cfg.clone(), cfg.seed)?;
    let report = fit_contrastive(&windows, &cfg, &mut enc)?;

    save_checkpoint(&out.join("encoder.ckpt"), &mut enc)?;
    let mut losses = std::io::BufWriter::new(std::fs::File::create(out.join("losses.csv"))?);
    writeln!(losses, "epoch,train_loss,val_loss,lr")?;
    for e in &report.epochs {
        writeln!(losses, "{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.lr)?;
    }
    losses.flush()?;

    persist_resolved(
        &out,
        "train",
        &Resolved {
            shards,
            out: out.clone(),
            encoder: preset,
            encoder_config: enc_cfg,
            contrastive: cfg,
        },
    )?;

    println!(
        "trained {} epochs on {} windows ({} validation); best val loss {:.6} at epoch {}",
        report.epochs.len(),
        windows.len(),
        report.val_windows,
        report.best_val_loss,
        report.best_epoch
    );
    Ok(())
}
