//! Fixed-record binary window shards for the training data path.
//!
//! Layout (little endian):
//!
//! ```text
//! magic "EDWS" | version u32 | count u64
//! n_strings u32 | (len u32, utf8 bytes) x n_strings
//! records: user_sid u32 | dataset_sid u32 | t_start f64 | label u8 | 720 x f32
//! ```
//!
//! `label` is 0/1 or 255 for unlabeled. Channel samples are stored as
//! `f32` in window channel order (original, phasic, tonic); residual
//! slices are not persisted.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use super::{Window, CHANNELS, WINDOW_SAMPLES};

const MAGIC: &[u8; 4] = b"EDWS";
const VERSION: u32 = 1;
const NO_LABEL: u8 = 255;

#[derive(Debug, Error)]
pub enum ShardError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt shard: {0}")]
    Corrupt(String),
}

/// Write windows to one shard file. Returns the record count.
pub fn write_shard(path: &Path, windows: &[Window]) -> Result<usize, ShardError> {
    // String table in first-seen order.
    fn intern(table: &mut Vec<String>, index: &mut HashMap<String, u32>, s: &str) -> u32 {
        if let Some(&i) = index.get(s) {
            return i;
        }
        let i = table.len() as u32;
        table.push(s.to_owned());
        index.insert(s.to_owned(), i);
        i
    }
    let mut table: Vec<String> = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut recs: Vec<(u32, u32)> = Vec::with_capacity(windows.len());
    for w in windows {
        let u = intern(&mut table, &mut index, &w.user_id);
        let d = intern(&mut table, &mut index, &w.dataset_id);
        recs.push((u, d));
    }

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(windows.len() as u64).to_le_bytes())?;
    out.write_all(&(table.len() as u32).to_le_bytes())?;
    for s in &table {
        out.write_all(&(s.len() as u32).to_le_bytes())?;
        out.write_all(s.as_bytes())?;
    }
    for (w, (u, d)) in windows.iter().zip(&recs) {
        out.write_all(&u.to_le_bytes())?;
        out.write_all(&d.to_le_bytes())?;
        out.write_all(&w.t_start.to_le_bytes())?;
        let label = match w.label {
            Some(true) => 1u8,
            Some(false) => 0u8,
            None => NO_LABEL,
        };
        out.write_all(&[label])?;
        for v in w.samples() {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(windows.len())
}

/// Read a whole shard into memory.
pub fn read_shard(path: &Path) -> Result<Vec<Window>, ShardError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 16];
    r.read_exact(&mut head)
        .map_err(|_| ShardError::Corrupt("truncated header".into()))?;
    if &head[..4] != MAGIC {
        return Err(ShardError::Corrupt("bad magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(ShardError::Corrupt(format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;

    let mut n_str = [0u8; 4];
    r.read_exact(&mut n_str)?;
    let n_str = u32::from_le_bytes(n_str) as usize;
    let mut table: Vec<Arc<str>> = Vec::with_capacity(n_str);
    for _ in 0..n_str {
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let len = u32::from_le_bytes(len) as usize;
        if len > 1 << 20 {
            return Err(ShardError::Corrupt("oversized string".into()));
        }
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)?;
        let s = String::from_utf8(bytes)
            .map_err(|_| ShardError::Corrupt("invalid utf8 in string table".into()))?;
        table.push(Arc::from(s.as_str()));
    }

    let mut windows = Vec::with_capacity(count);
    let mut rec = vec![0u8; 4 + 4 + 8 + 1 + CHANNELS * WINDOW_SAMPLES * 4];
    for i in 0..count {
        r.read_exact(&mut rec)
            .map_err(|_| ShardError::Corrupt(format!("truncated record {i}")))?;
        let u = u32::from_le_bytes(rec[0..4].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(rec[4..8].try_into().unwrap()) as usize;
        let t_start = f64::from_le_bytes(rec[8..16].try_into().unwrap());
        let label = match rec[16] {
            0 => Some(false),
            1 => Some(true),
            NO_LABEL => None,
            other => return Err(ShardError::Corrupt(format!("bad label byte {other}"))),
        };
        if u >= table.len() || d >= table.len() {
            return Err(ShardError::Corrupt("string id out of range".into()));
        }
        let mut channels = Vec::with_capacity(CHANNELS * WINDOW_SAMPLES);
        for k in 0..CHANNELS * WINDOW_SAMPLES {
            let at = 17 + 4 * k;
            channels.push(f32::from_le_bytes(rec[at..at + 4].try_into().unwrap()) as f64);
        }
        let mut w = Window::new(channels, table[u].clone(), table[d].clone(), t_start);
        w.label = label;
        windows.push(w);
    }
    Ok(windows)
}
