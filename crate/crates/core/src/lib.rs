//! Network bootstrapping from a single observed graph.
//!
//! Spectral embeddings ([`embed`]) place nodes in a low-dimensional space;
//! nearest-neighbour averages of adjacency rows give an edge-probability
//! estimate from which bootstrap replicates are drawn ([`bootstrap`]).
//! [`validity`] checks replicates against the observation with a paired
//! exchangeability test, and [`uncertainty`] turns a bootstrap sample into
//! per-node position uncertainty.

pub mod bootstrap;
pub mod embed;
pub mod error;
pub mod graph;
pub mod knn;
pub mod linalg;
pub mod rng;
pub mod uncertainty;
pub mod validity;

pub use error::{Error, Result};
pub use graph::{AdjacencyMatrix, ProbabilityMatrix};

use std::fs;
use std::io::Write;
use std::path::Path;

/// Write `bytes` to a sibling temporary file and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
