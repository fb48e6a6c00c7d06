//! Config-file handling: one TOML file with a table per command.
//!
//! Precedence is flag > config file > built-in default. Every command
//! persists its fully resolved parameter record next to its outputs,
//! so a run directory documents exactly what produced it.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

/// Load the `[command]` table of the config file, when present.
pub fn load_section<T: DeserializeOwned>(
    config: Option<&Path>,
    section: &str,
) -> Result<Option<T>, CliError> {
    let Some(path) = config else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("config {}: {e}", path.display())))?;
    let table: toml::Table = text.parse()?;
    match table.get(section) {
        None => Ok(None),
        Some(t) => Ok(Some(t.clone().try_into().map_err(CliError::from)?)),
    }
}

/// Write the resolved parameter record as TOML.
pub fn persist_resolved<T: Serialize>(
    out_dir: &Path,
    command: &str,
    resolved: &T,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let body = toml::to_string_pretty(resolved)?;
    let text = format!("# resolved configuration, written by `edakit {command}`\n{body}");
    std::fs::write(out_dir.join(format!("{command}.resolved.toml")), text)?;
    Ok(())
}

/// `flag.or(config).unwrap_or(default)`.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
