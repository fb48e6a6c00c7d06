//! Ingestion of E4-style EDA session files into a unified archive.
//!
//! Canonical text format, one file per recording:
//!
//! ```text
//! 1500000000.000000      <- unix start time (UTC, seconds); blank line -> 0
//! 4.000000               <- sample rate, must be 4 Hz
//! 0.512300               <- one conductance sample per line, microsiemens
//! ...
//! ```
//!
//! Other layouts must be converted upstream. The archive keeps one
//! directory per dataset, one sub-directory per user, each recording as
//! a raw little-endian `f32` array plus a JSON sidecar, and a
//! line-delimited manifest; that layout favors the sequential scans of
//! the training data path.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::Series;

/// Body side the device was worn on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    #[default]
    Unknown,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header line {line}: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("sample rate mismatch: {0} Hz (corpus is fixed at 4 Hz)")]
    RateMismatch(f64),
    #[error("negative sample at line {line}: {value}")]
    NegativeSample { line: usize, value: f64 },
    #[error("malformed sample at line {line}: {msg}")]
    MalformedSample { line: usize, msg: String },
    #[error("no samples in file")]
    EmptySeries,
    #[error("no valid recordings under {0}")]
    EmptyArchive(PathBuf),
    #[error("manifest invariant violated: {0}")]
    ManifestInvariant(String),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON error at {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_path_buf(), source }
}

/// One continuous 4 Hz conductance trace with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EdaRecording {
    pub user_id: String,
    pub dataset_id: String,
    /// Seconds since the unix epoch (UTC); 0 when the source had no
    /// timestamp.
    pub start_unix: f64,
    pub rate_hz: f64,
    /// Conductance samples in microsiemens, as stored on disk.
    pub values: Vec<f32>,
    pub side: Side,
}

impl EdaRecording {
    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.rate_hz
    }

    /// Widen to the f64 processing series (exact).
    pub fn to_series(&self) -> Series {
        Series::new(self.values.iter().map(|v| *v as f64).collect())
            .expect("parse rejects non-finite samples")
    }
}

/// Parsed sample payload of one file, before provenance is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct E4Data {
    pub start_unix: f64,
    pub rate_hz: f64,
    pub values: Vec<f32>,
}

/// Parse the canonical E4 EDA text format.
pub fn parse_e4_eda(file_bytes: &[u8]) -> Result<E4Data, IngestError> {
    let text = std::str::from_utf8(file_bytes).map_err(|e| IngestError::MalformedHeader {
        line: 1,
        msg: format!("not UTF-8 text: {e}"),
    })?;
    let mut lines = text.lines();

    let ts_line = lines.next().unwrap_or("").trim();
    let start_unix = if ts_line.is_empty() {
        // Missing timestamp: the corpus convention pins the start to
        // unix time 0.
        0.0
    } else {
        let v: f64 = ts_line.parse().map_err(|_| IngestError::MalformedHeader {
            line: 1,
            msg: format!("unparsable start timestamp {ts_line:?}"),
        })?;
        if !v.is_finite() || v < 0.0 {
            return Err(IngestError::MalformedHeader {
                line: 1,
                msg: format!("start timestamp must be finite and >= 0, got {v}"),
            });
        }
        v
    };

    let rate_line = lines.next().unwrap_or("").trim();
    let rate_hz: f64 = rate_line.parse().map_err(|_| IngestError::MalformedHeader {
        line: 2,
        msg: format!("unparsable sample rate {rate_line:?}"),
    })?;
    if !rate_hz.is_finite() || (rate_hz - crate::signal::RATE_HZ).abs() > 1e-9 {
        return Err(IngestError::RateMismatch(rate_hz));
    }

    let mut values = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 3;
        let v: f32 = line.parse().map_err(|_| IngestError::MalformedSample {
            line: lineno,
            msg: format!("unparsable sample {line:?}"),
        })?;
        if !v.is_finite() {
            return Err(IngestError::MalformedSample {
                line: lineno,
                msg: format!("non-finite sample {v}"),
            });
        }
        if v < 0.0 {
            return Err(IngestError::NegativeSample { line: lineno, value: v as f64 });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(IngestError::EmptySeries);
    }
    Ok(E4Data { start_unix, rate_hz: crate::signal::RATE_HZ, values })
}

/// Per-dataset tags applied at ingest (scenario, environment, side).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TagEntry {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub environment: Option<String>,
    #[serde(default)]
    pub side: Option<Side>,
}

pub type DatasetTags = HashMap<String, TagEntry>;

pub fn load_tags(path: &Path) -> Result<DatasetTags, IngestError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|source| IngestError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub dataset_id: String,
    pub user_id: String,
    /// Path of the `.f32` sample file, relative to the archive root.
    pub path: String,
    pub duration_s: f64,
    pub scenario: String,
    pub environment: String,
    pub side: Side,
    pub start_unix: f64,
    pub n_samples: usize,
}

/// A file the scan could not ingest, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkipRecord {
    pub path: String,
    pub error: String,
}

/// Manifest of every recording in an archive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArchiveManifest {
    pub entries: Vec<ArchiveEntry>,
}

impl ArchiveManifest {
    /// Enforce the manifest invariants: unique (dataset, user, path)
    /// triples and `duration == n_samples / 4`.
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            let key = (e.dataset_id.as_str(), e.user_id.as_str(), e.path.as_str());
            if !seen.insert(key) {
                return Err(IngestError::ManifestInvariant(format!(
                    "duplicate entry {key:?}"
                )));
            }
            let want = e.n_samples as f64 / crate::signal::RATE_HZ;
            if (e.duration_s - want).abs() > 1e-9 * want.max(1.0) {
                return Err(IngestError::ManifestInvariant(format!(
                    "duration {} != n_samples/4 = {} for {}",
                    e.duration_s, want, e.path
                )));
            }
        }
        Ok(())
    }

    pub fn total_hours(&self) -> f64 {
        self.entries.iter().map(|e| e.duration_s).sum::<f64>() / 3600.0
    }

    pub fn users(&self) -> HashSet<(&str, &str)> {
        self.entries
            .iter()
            .map(|e| (e.dataset_id.as_str(), e.user_id.as_str()))
            .collect()
    }

    /// Line-delimited JSON, one entry per line.
    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        let mut out = Vec::new();
        for e in &self.entries {
            serde_json::to_writer(&mut out, e).map_err(|source| IngestError::Json {
                path: path.to_path_buf(),
                source,
            })?;
            out.push(b'\n');
        }
        fs::write(path, out).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut entries = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(line).map_err(|source| IngestError::Json {
                path: path.to_path_buf(),
                source,
            })?);
        }
        let m = Self { entries };
        m.validate()?;
        Ok(m)
    }
}

/// Candidate source file found under `root/<dataset>/<user>/...`.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub dataset_id: String,
    pub user_id: String,
    pub path: PathBuf,
}

/// Scan `root/<dataset>/<user>/**` for `.csv`/`.txt` files, sorted by
/// path for deterministic processing order.
pub fn scan_e4_tree(root: &Path) -> Result<Vec<SourceFile>, IngestError> {
    let mut out = Vec::new();
    let datasets = read_dir_sorted(root)?;
    for ds in datasets.iter().filter(|p| p.is_dir()) {
        let dataset_id = dir_name(ds);
        for user in read_dir_sorted(ds)?.iter().filter(|p| p.is_dir()) {
            let user_id = dir_name(user);
            collect_files(user, &mut |f| {
                let ext = f.extension().and_then(|e| e.to_str()).unwrap_or("");
                if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") {
                    out.push(SourceFile {
                        dataset_id: dataset_id.clone(),
                        user_id: user_id.clone(),
                        path: f.to_path_buf(),
                    });
                }
            })?;
        }
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    v.sort();
    Ok(v)
}

fn collect_files(dir: &Path, f: &mut impl FnMut(&Path)) -> Result<(), IngestError> {
    for p in read_dir_sorted(dir)? {
        if p.is_dir() {
            collect_files(&p, f)?;
        } else {
            f(&p);
        }
    }
    Ok(())
}

fn dir_name(p: &Path) -> String {
    p.file_name().unwrap_or_default().to_string_lossy().into_owned()
}

/// JSON sidecar stored next to each `.f32` sample file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordingSidecar {
    pub user_id: String,
    pub dataset_id: String,
    pub start_unix: f64,
    pub rate_hz: f64,
    pub n_samples: usize,
    pub side: Side,
}

/// Parse every source file under `root` and materialize the archive at
/// `archive_dir`. Parsing runs in parallel; results are assembled in
/// scan order, so reruns are byte-identical. Unparsable files land in
/// the skip report instead of failing the build.
pub fn build_archive(
    root: &Path,
    archive_dir: &Path,
    tags: &DatasetTags,
) -> Result<(ArchiveManifest, Vec<SkipRecord>), IngestError> {
    let sources = scan_e4_tree(root)?;
    let parsed: Vec<(SourceFile, Result<E4Data, IngestError>)> = sources
        .into_par_iter()
        .map(|src| {
            let data = fs::read(&src.path)
                .map_err(io_err(&src.path))
                .and_then(|bytes| parse_e4_eda(&bytes));
            (src, data)
        })
        .collect();

    let mut entries = Vec::new();
    let mut skips = Vec::new();
    for (src, result) in parsed {
        let tag = tags.get(&src.dataset_id).cloned().unwrap_or_default();
        match result {
            Err(err) => skips.push(SkipRecord {
                path: src.path.display().to_string(),
                error: err.to_string(),
            }),
            Ok(data) => {
                let stem = src
                    .path
                    .file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                let rel_dir = Path::new(&src.dataset_id).join(&src.user_id);
                let abs_dir = archive_dir.join(&rel_dir);
                fs::create_dir_all(&abs_dir).map_err(io_err(&abs_dir))?;

                // Disambiguate recordings that share a file stem.
                let mut name = stem.clone();
                let mut k = 1;
                while abs_dir.join(format!("{name}.f32")).exists() {
                    name = format!("{stem}_{k}");
                    k += 1;
                }
                let rel_path = rel_dir.join(format!("{name}.f32"));
                let abs_path = archive_dir.join(&rel_path);

                let mut raw = Vec::with_capacity(data.values.len() * 4);
                for v in &data.values {
                    raw.extend_from_slice(&v.to_le_bytes());
                }
                let mut f = fs::File::create(&abs_path).map_err(io_err(&abs_path))?;
                f.write_all(&raw).map_err(io_err(&abs_path))?;

                let side = tag.side.unwrap_or_default();
                let sidecar = RecordingSidecar {
                    user_id: src.user_id.clone(),
                    dataset_id: src.dataset_id.clone(),
                    start_unix: data.start_unix,
                    rate_hz: data.rate_hz,
                    n_samples: data.values.len(),
                    side,
                };
                let sc_path = abs_path.with_extension("json");
                let sc_bytes =
                    serde_json::to_vec_pretty(&sidecar).map_err(|source| IngestError::Json {
                        path: sc_path.clone(),
                        source,
                    })?;
                fs::write(&sc_path, sc_bytes).map_err(io_err(&sc_path))?;

                entries.push(ArchiveEntry {
                    dataset_id: src.dataset_id,
                    user_id: src.user_id,
                    path: rel_path.to_string_lossy().into_owned(),
                    duration_s: data.values.len() as f64 / data.rate_hz,
                    scenario: tag.scenario.unwrap_or_else(|| "unknown".into()),
                    environment: tag.environment.unwrap_or_else(|| "unknown".into()),
                    side,
                    start_unix: data.start_unix,
                    n_samples: data.values.len(),
                });
            }
        }
    }

    if entries.is_empty() {
        return Err(IngestError::EmptyArchive(root.to_path_buf()));
    }
    let manifest = ArchiveManifest { entries };
    manifest.validate()?;
    Ok((manifest, skips))
}

/// Manifest-only pass over a source tree (no archive is written);
/// entry paths point at the source files.
pub fn build_manifest(root: &Path) -> Result<(ArchiveManifest, Vec<SkipRecord>), IngestError> {
    let sources = scan_e4_tree(root)?;
    let parsed: Vec<(SourceFile, Result<E4Data, IngestError>)> = sources
        .into_par_iter()
        .map(|src| {
            let data = fs::read(&src.path)
                .map_err(io_err(&src.path))
                .and_then(|bytes| parse_e4_eda(&bytes));
            (src, data)
        })
        .collect();

    let mut entries = Vec::new();
    let mut skips = Vec::new();
    for (src, result) in parsed {
        match result {
            Err(err) => skips.push(SkipRecord {
                path: src.path.display().to_string(),
                error: err.to_string(),
            }),
            Ok(data) => entries.push(ArchiveEntry {
                dataset_id: src.dataset_id,
                user_id: src.user_id,
                path: src.path.display().to_string(),
                duration_s: data.values.len() as f64 / data.rate_hz,
                scenario: "unknown".into(),
                environment: "unknown".into(),
                side: Side::Unknown,
                start_unix: data.start_unix,
                n_samples: data.values.len(),
            }),
        }
    }
    if entries.is_empty() {
        return Err(IngestError::EmptyArchive(root.to_path_buf()));
    }
    let manifest = ArchiveManifest { entries };
    manifest.validate()?;
    Ok((manifest, skips))
}

/// Load one recording(samples + sidecar) from an archive.
pub fn load_recording(archive_dir: &Path, entry: &ArchiveEntry) -> Result<EdaRecording, IngestError> {
    let path = archive_dir.join(&entry.path);
    let raw = fs::read(&path).map_err(io_err(&path))?;
    if !raw.len().is_multiple_of(4) {
        return Err(IngestError::ManifestInvariant(format!(
            "sample file {} has {} bytes (not a multiple of 4)",
            entry.path,
            raw.len()
        )));
    }
    let values: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let sc_path = path.with_extension("json");
    let sc_bytes = fs::read(&sc_path).map_err(io_err(&sc_path))?;
    let sidecar: RecordingSidecar =
        serde_json::from_slice(&sc_bytes).map_err(|source| IngestError::Json {
            path: sc_path.clone(),
            source,
        })?;
    if sidecar.n_samples != values.len() {
        return Err(IngestError::ManifestInvariant(format!(
            "sidecar says {} samples, file has {}",
            sidecar.n_samples,
            values.len()
        )));
    }

    Ok(EdaRecording {
        user_id: sidecar.user_id,
        dataset_id: sidecar.dataset_id,
        start_unix: sidecar.start_unix,
        rate_hz: sidecar.rate_hz,
        values,
        side: sidecar.side,
    })
}
