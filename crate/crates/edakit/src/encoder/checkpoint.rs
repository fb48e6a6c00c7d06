//! Versioned binary weight checkpoints with named, shape-validated
//! tensors.
//!
//! ```text
//! magic "EDCK" | version u32 | config_len u32 | config JSON
//! n_tensors u32
//! per tensor: name_len u32 | name | ndims u32 | dims u64... | f32 data
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::effnet::{Encoder, EncoderConfig};
use super::EncoderError;

const MAGIC: &[u8; 4] = b"EDCK";
const VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, enc: &mut Encoder<f32>) -> Result<(), EncoderError> {
    let config = serde_json::to_vec(&enc.config)
        .map_err(|e| EncoderError::Checkpoint(format!("config serialize: {e}")))?;
    let tensors = enc.named_tensors_mut();

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(config.len() as u32).to_le_bytes())?;
    out.write_all(&config)?;
    out.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, t) in tensors {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        let shape = t.shape();
        out.write_all(&(shape.len() as u32).to_le_bytes())?;
        for d in &shape {
            out.write_all(&(*d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Encoder<f32>, EncoderError> {
    let mut r = BufReader::new(File::open(path)?);
    let corrupt = |msg: &str| EncoderError::Checkpoint(msg.to_string());

    let mut head = [0u8; 12];
    r.read_exact(&mut head).map_err(|_| corrupt("truncated header"))?;
    if &head[..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(EncoderError::Checkpoint(format!("unsupported version {version}")));
    }
    let config_len = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let mut config_bytes = vec![0u8; config_len];
    r.read_exact(&mut config_bytes).map_err(|_| corrupt("truncated config"))?;
    let config: EncoderConfig = serde_json::from_slice(&config_bytes)
        .map_err(|e| EncoderError::Checkpoint(format!("config parse: {e}")))?;

    let mut enc = Encoder::<f32>::new(config, 0)?;

    let mut n = [0u8; 4];
    r.read_exact(&mut n).map_err(|_| corrupt("truncated tensor count"))?;
    let n = u32::from_le_bytes(n) as usize;

    let mut stored: std::collections::HashMap<String, (Vec<usize>, Vec<f32>)> =
        std::collections::HashMap::new();
    for _ in 0..n {
        let mut len = [0u8; 4];
        r.read_exact(&mut len).map_err(|_| corrupt("truncated name"))?;
        let len = u32::from_le_bytes(len) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(|_| corrupt("truncated name"))?;
        let name = String::from_utf8(name).map_err(|_| corrupt("invalid name"))?;

        let mut nd = [0u8; 4];
        r.read_exact(&mut nd).map_err(|_| corrupt("truncated dims"))?;
        let nd = u32::from_le_bytes(nd) as usize;
        let mut shape = Vec::with_capacity(nd);
        for _ in 0..nd {
            let mut d = [0u8; 8];
            r.read_exact(&mut d).map_err(|_| corrupt("truncated dims"))?;
            shape.push(u64::from_le_bytes(d) as usize);
        }
        let count: usize = shape.iter().product();
        let mut bytes = vec![0u8; count * 4];
        r.read_exact(&mut bytes).map_err(|_| corrupt("truncated data"))?;
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if stored.insert(name.clone(), (shape, data)).is_some() {
            return Err(EncoderError::Checkpoint(format!("duplicate tensor {name}")));
        }
    }

    // Fill by name; every network tensor must be present with the
    // right shape, and nothing may be left over.
    for (name, mut t) in enc.named_tensors_mut() {
        let (shape, data) = stored
            .remove(&name)
            .ok_or_else(|| EncoderError::Checkpoint(format!("missing tensor {name}")))?;
        if shape != t.shape() {
            return Err(EncoderError::Checkpoint(format!(
                "shape mismatch for {name}: checkpoint {shape:?}, model {:?}",
                t.shape()
            )));
        }
        t.data_mut().copy_from_slice(&data);
    }
    if let Some(extra) = stored.keys().next() {
        return Err(EncoderError::Checkpoint(format!("unknown tensor {extra}")));
    }
    Ok(enc)
}
