//! `edakit features` — handcrafted feature extraction.

use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use edakit::features::io::write_feature_csv;
use edakit::features::{generic_features, EdaFeatureExtractor, FeatureSet};
use edakit::segment::WindowMeta;

use crate::config::{load_section, persist_resolved};
use crate::error::CliError;

#[derive(Args)]
pub struct FeaturesArgs {
    #[arg(long, num_args = 1..)]
    shards: Vec<PathBuf>,
    /// Feature set: `generic` (12) or `eda` (45).
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct FeaturesConfig {
    shards: Option<Vec<PathBuf>>,
    set: Option<String>,
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Resolved {
    shards: Vec<PathBuf>,
    set: String,
    out: PathBuf,
    dim: usize,
}

pub fn run(args: FeaturesArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: FeaturesConfig = load_section(config, "features")?.unwrap_or_default();
    let shards = if args.shards.is_empty() {
        file.shards.unwrap_or_default()
    } else {
        args.shards
    };
    let set_name = args.set.or(file.set).unwrap_or_else(|| "eda".into());
    let set = match set_name.as_str() {
        "generic" => FeatureSet::Generic,
        "eda" => FeatureSet::EdaSpecific,
        other => return Err(CliError::data(format!("unknown feature set {other:?}"))),
    };
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::data("features: --out is required"))?;

    let windows = super::read_shards(&shards)?;
    let rows: Vec<Vec<f64>> = match set {
        FeatureSet::Generic => windows
            .par_iter()
            .map(|w| generic_features(w).values)
            .collect(),
        FeatureSet::EdaSpecific => windows
            .par_iter()
            .map_init(EdaFeatureExtractor::new, |ex, w| ex.extract(w).values)
            .collect(),
    };
    let metas: Vec<WindowMeta> = windows.iter().map(WindowMeta::from).collect();
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_feature_csv(&out, &metas, &rows, &set.names())?;

    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    persist_resolved(
        &out_dir,
        "features",
        &Resolved { shards, set: set_name, out: out.clone(), dim: set.dim() },
    )?;
    println!(
        "wrote {} feature rows of dim {} to {}",
        rows.len(),
        set.dim(),
        out.display()
    );
    Ok(())
}
