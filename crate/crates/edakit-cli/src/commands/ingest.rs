//! `edakit ingest` — source tree to archive + manifest.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use edakit::ingest::{build_archive, load_tags, DatasetTags};

use crate::config::{load_section, persist_resolved};
use crate::error::CliError;

#[derive(Args)]
pub struct IngestArgs {
    /// Source tree: <input>/<dataset>/<user>/**.csv
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output archive directory.
    #[arg(long)]
    archive: Option<PathBuf>,
    /// Optional JSON file: dataset id -> {scenario, environment, side}.
    #[arg(long)]
    tags: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct IngestConfig {
    input: Option<PathBuf>,
    archive: Option<PathBuf>,
    tags: Option<PathBuf>,
}

pub fn run(args: IngestArgs, config: Option<&Path>) -> Result<(), CliError> {
    let file: IngestConfig = load_section(config, "ingest")?.unwrap_or_default();
    let input = args
        .input
        .or(file.input)
        .ok_or_else(|| CliError::data("ingest: --input is required"))?;
    let archive = args
        .archive
        .or(file.archive)
        .ok_or_else(|| CliError::data("ingest: --archive is required"))?;
    let tags_path = args.tags.or(file.tags);

    let tags: DatasetTags = match &tags_path {
        Some(p) => load_tags(p)?,
        None => DatasetTags::new(),
    };

    let (manifest, skips) = build_archive(&input, &archive, &tags)?;
    manifest.save(&archive.join("manifest.jsonl"))?;
    let mut skip_lines = String::new();
    for s in &skips {
        skip_lines.push_str(&serde_json::to_string(s)?);
        skip_lines.push('\n');
    }
    std::fs::write(archive.join("skips.jsonl"), skip_lines)?;

    persist_resolved(
        &archive,
        "ingest",
        &IngestConfig {
            input: Some(input),
            archive: Some(archive.clone()),
            tags: tags_path,
        },
    )?;

    println!(
        "ingested {} recordings ({} skipped), {:.2} h total, {} users",
        manifest.entries.len(),
        skips.len(),
        manifest.total_hours(),
        manifest.users().len()
    );
    Ok(())
}
