//! On-disk decomposition cache keyed by (recording hash, params hash).
//!
//! Tonic, phasic and driver are stored as little-endian `f64`; the
//! residual is recomputed from the input on load so the additive
//! identity `tonic + phasic + residual == input` survives the round
//! trip exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{CvxedaParams, Decomposition, DecomposeError};
use crate::signal::Series;

const MAGIC: &[u8; 4] = b"EDDC";
const VERSION: u32 = 1;

/// Cache directory handle.
#[derive(Debug, Clone)]
pub struct DecompositionCache {
    dir: PathBuf,
}

impl DecompositionCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn key(series: &Series, params: &CvxedaParams) -> String {
        let mut h = Sha256::new();
        for v in series.values() {
            h.update(v.to_le_bytes());
        }
        h.update(serde_json::to_vec(params).expect("params serialize"));
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.dec"))
    }

    pub fn load(
        &self,
        series: &Series,
        params: &CvxedaParams,
    ) -> Result<Option<Decomposition>, DecomposeError> {
        let path = self.path_for(&Self::key(series, params));
        if !path.exists() {
            return Ok(None);
        }
        let dec = read_components(&path, series)?;
        Ok(Some(dec))
    }

    pub fn store(
        &self,
        series: &Series,
        params: &CvxedaParams,
        dec: &Decomposition,
    ) -> Result<PathBuf, DecomposeError> {
        let path = self.path_for(&Self::key(series, params));
        write_components(&path, dec)?;
        Ok(path)
    }
}

fn write_components(path: &Path, dec: &Decomposition) -> Result<(), DecomposeError> {
    let mut buf = Vec::with_capacity(16 + dec.len() * 24);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(dec.len() as u64).to_le_bytes());
    for channel in [&dec.tonic, &dec.phasic, &dec.driver] {
        for v in channel {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let tmp = path.with_extension("dec.tmp");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(&buf)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_components(path: &Path, series: &Series) -> Result<Decomposition, DecomposeError> {
    let mut f = fs::File::open(path)?;
    let mut header = [0u8; 16];
    f.read_exact(&mut header)
        .map_err(|_| DecomposeError::CacheCorrupt("truncated header".into()))?;
    if &header[..4] != MAGIC {
        return Err(DecomposeError::CacheCorrupt("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(DecomposeError::CacheCorrupt(format!(
            "unsupported version {version}"
        )));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    if n != series.len() {
        return Err(DecomposeError::CacheCorrupt(format!(
            "length mismatch: cache {n}, series {}",
            series.len()
        )));
    }
    let mut data = vec![0u8; n * 24];
    f.read_exact(&mut data)
        .map_err(|_| DecomposeError::CacheCorrupt("truncated data".into()))?;

    let read_channel = |offset: usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let at = (offset * n + i) * 8;
                f64::from_le_bytes(data[at..at + 8].try_into().unwrap())
            })
            .collect()
    };
    let tonic = read_channel(0);
    let phasic = read_channel(1);
    let driver = read_channel(2);
    let residual: Vec<f64> = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, y)| y - phasic[i] - tonic[i])
        .collect();
    Ok(Decomposition {
        tonic,
        phasic,
        driver,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_components_and_additivity() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DecompositionCache::new(dir.path()).unwrap();
        let y: Vec<f64> = (0..120).map(|i| 1.0 + (i as f64 * 0.1).sin()).collect();
        let series = Series::new(y.clone()).unwrap();
        let params = CvxedaParams::default();

        assert!(cache.load(&series, &params).unwrap().is_none());

        let dec = super::super::cvxeda(&series, &params).unwrap().decomposition;
        cache.store(&series, &params, &dec).unwrap();
        let loaded = cache.load(&series, &params).unwrap().unwrap();
        assert_eq!(loaded.tonic, dec.tonic);
        assert_eq!(loaded.phasic, dec.phasic);
        assert_eq!(loaded.driver, dec.driver);
        for i in 0..y.len() {
            let sum = loaded.tonic[i] + loaded.phasic[i] + loaded.residual[i];
            assert!((sum - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn different_params_use_different_keys() {
        let y: Vec<f64> = (0..80).map(|i| i as f64 * 0.01).collect();
        let series = Series::new(y).unwrap();
        let a = DecompositionCache::key(&series, &CvxedaParams::default());
        let mut p = CvxedaParams::default();
        p.alpha = 1e-3;
        let b = DecompositionCache::key(&series, &p);
        assert_ne!(a, b);
    }
}
