pub mod augment_preview;
pub mod bench;
pub mod corpus_stats;
pub mod embed;
pub mod evaluate;
pub mod features;
pub mod ingest;
pub mod preprocess;
pub mod probe;
pub mod train;
pub mod window;

use std::path::PathBuf;

use edakit::segment::shard::read_shard;
use edakit::segment::Window;

use crate::error::CliError;

/// Read and concatenate window shards in argument order.
pub fn read_shards(paths: &[PathBuf]) -> Result<Vec<Window>, CliError> {
    if paths.is_empty() {
        return Err(CliError::data("no shard files given"));
    }
    let mut windows = Vec::new();
    for p in paths {
        windows.extend(read_shard(p)?);
    }
    if windows.is_empty() {
        return Err(CliError::data("shards contain no windows"));
    }
    Ok(windows)
}
