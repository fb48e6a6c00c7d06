//! Columnar feature/embedding files: CSV with a meta prefix and one
//! named column per feature.
//!
//! ```text
//! user_id,dataset_id,t_start,label,orig_mean,orig_std,...
//! u1,ds1,1000,1,0.52,...
//! ```
//!
//! `label` is `0`/`1` or empty. Floats round-trip exactly (shortest
//! representation that parses back to the same value). Identifiers may
//! not contain commas, newlines or quotes; rejected at write time.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::segment::WindowMeta;

/// Parsed feature file: window metadata, feature rows, column names.
pub type FeatureTable = (Vec<WindowMeta>, Vec<Vec<f64>>, Vec<String>);

#[derive(Debug, Error)]
pub enum FeatureIoError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("identifier {0:?} contains a reserved character (comma, quote or newline)")]
    BadIdentifier(String),
    #[error("malformed feature file at line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("row count mismatch: {metas} metas, {rows} feature rows")]
    RowMismatch { metas: usize, rows: usize },
}

fn check_id(s: &str) -> Result<(), FeatureIoError> {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        return Err(FeatureIoError::BadIdentifier(s.to_string()));
    }
    Ok(())
}

/// Write one row per meta with its feature values.
pub fn write_feature_csv(
    path: &Path,
    metas: &[WindowMeta],
    rows: &[Vec<f64>],
    names: &[String],
) -> Result<(), FeatureIoError> {
    if metas.len() != rows.len() {
        return Err(FeatureIoError::RowMismatch { metas: metas.len(), rows: rows.len() });
    }
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "user_id,dataset_id,t_start,label")?;
    for n in names {
        check_id(n)?;
        write!(out, ",{n}")?;
    }
    writeln!(out)?;
    for (m, row) in metas.iter().zip(rows) {
        check_id(&m.user_id)?;
        check_id(&m.dataset_id)?;
        let label = match m.label {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        write!(out, "{},{},{},{}", m.user_id, m.dataset_id, m.t_start, label)?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Read a feature file back: (metas, rows, feature names).
pub fn read_feature_csv(path: &Path) -> Result<FeatureTable, FeatureIoError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or(FeatureIoError::Malformed { line: 1, msg: "empty file".into() })??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[..4] != ["user_id", "dataset_id", "t_start", "label"] {
        return Err(FeatureIoError::Malformed {
            line: 1,
            msg: "expected meta prefix user_id,dataset_id,t_start,label".into(),
        });
    }
    let names: Vec<String> = cols[4..].iter().map(|s| s.to_string()).collect();

    let mut metas = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + names.len() {
            return Err(FeatureIoError::Malformed {
                line: lineno,
                msg: format!("expected {} fields, got {}", 4 + names.len(), fields.len()),
            });
        }
        let t_start: f64 = fields[2].parse().map_err(|_| FeatureIoError::Malformed {
            line: lineno,
            msg: format!("bad t_start {:?}", fields[2]),
        })?;
        let label = match fields[3] {
            "" => None,
            "0" => Some(false),
            "1" => Some(true),
            other => {
                return Err(FeatureIoError::Malformed {
                    line: lineno,
                    msg: format!("bad label {other:?}"),
                })
            }
        };
        let mut row = Vec::with_capacity(names.len());
        for f in &fields[4..] {
            row.push(f.parse().map_err(|_| FeatureIoError::Malformed {
                line: lineno,
                msg: format!("bad float {f:?}"),
            })?);
        }
        metas.push(WindowMeta {
            user_id: fields[0].to_string(),
            dataset_id: fields[1].to_string(),
            t_start,
            label,
        });
        rows.push(row);
    }
    Ok((metas, rows, names))
}
