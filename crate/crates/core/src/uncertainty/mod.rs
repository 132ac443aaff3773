//! Node-level uncertainty from a bootstrap sample.
//!
//! The observed network and its replicates are embedded jointly, giving each
//! node `B + 1` positions. Their mean and covariance describe where the node
//! could plausibly sit. Two nodes overlap when each lies within a Mahalanobis
//! radius of the other, and a 2-D layout is scored by how evenly it spaces
//! overlapping pairs.

mod layout;
mod tsne;

use std::borrow::Borrow;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapBatch;
use crate::embed::{self, Embedding};
use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;

pub use layout::{read_layout_csv, write_layout_csv, Layout2D, LayoutSource};
pub use tsne::{
    adjacency_sq_distances, perplexity_scan, tsne_layout, tsne_layout_with, tsne_run, PerplexityScan,
    TsneConfig, TsneRun,
};

pub const DEFAULT_SD_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeUncertainty {
    /// `n x d` mean positions.
    pub means: DMatrix<f64>,
    /// One `d x d` sample covariance per node.
    pub covariances: Vec<DMatrix<f64>>,
    /// Number of bootstrap replicates (`B`); each node has `B + 1` positions.
    pub b_used: usize,
}

impl NodeUncertainty {
    pub fn n(&self) -> usize {
        self.means.nrows()
    }

    pub fn d(&self) -> usize {
        self.means.ncols()
    }
}

/// Per-node mean and covariance over the blocks of a stacked embedding.
pub fn uncertainty_from_embedding(y: &Embedding) -> Result<NodeUncertainty> {
    let samples = y.blocks();
    if samples < 2 {
        return Err(Error::invalid("covariance needs at least two positions per node"));
    }
    let n = y.block_rows();
    let d = y.d();
    let pos = y.positions();
    let per_node: Vec<(DVector<f64>, DMatrix<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut mean = DVector::<f64>::zeros(d);
            for s in 0..samples {
                mean += pos.row(s * n + i).transpose();
            }
            mean /= samples as f64;
            let mut cov = DMatrix::<f64>::zeros(d, d);
            for s in 0..samples {
                let dev = pos.row(s * n + i).transpose() - &mean;
                cov.ger(1.0, &dev, &dev, 1.0);
            }
            cov /= (samples - 1) as f64;
            (mean, cov)
        })
        .collect();
    let mut means = DMatrix::<f64>::zeros(n, d);
    let mut covariances = Vec::with_capacity(n);
    for (i, (m, c)) in per_node.into_iter().enumerate() {
        means.row_mut(i).copy_from(&m.transpose());
        covariances.push(c);
    }
    Ok(NodeUncertainty {
        means,
        covariances,
        b_used: samples - 1,
    })
}

/// Joint UASE of the observed network and its replicates, then per-node
/// moments over the `B + 1` positions.
pub fn node_uncertainty(
    a_obs: &AdjacencyMatrix,
    batch: &BootstrapBatch,
    d: usize,
) -> Result<(Embedding, NodeUncertainty)> {
    node_uncertainty_from(a_obs, &batch.replicates, d)
}

pub fn node_uncertainty_from<N: Borrow<AdjacencyMatrix>>(
    a_obs: &AdjacencyMatrix,
    replicates: &[N],
    d: usize,
) -> Result<(Embedding, NodeUncertainty)> {
    if replicates.is_empty() {
        return Err(Error::invalid("node uncertainty needs at least one replicate"));
    }
    let mut all: Vec<&AdjacencyMatrix> = Vec::with_capacity(replicates.len() + 1);
    all.push(a_obs);
    all.extend(replicates.iter().map(Borrow::borrow));
    let (y, _) = embed::uase(&all, d)?;
    let unc = uncertainty_from_embedding(&y)?;
    Ok((y, unc))
}

/// Binary, symmetric overlap indicator between nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzinessMatrix {
    n: usize,
    entries: Vec<bool>,
    sd_threshold_bits: u64,
}

impl FuzzinessMatrix {
    /// Build from an explicit list of overlapping pairs; the diagonal is set.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>, sd_threshold: f64) -> Result<Self> {
        let mut entries = vec![false; n * n];
        for i in 0..n {
            entries[i * n + i] = true;
        }
        for (i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("pair ({i}, {j}) out of range for n = {n}")));
            }
            entries[i * n + j] = true;
            entries[j * n + i] = true;
        }
        Ok(Self {
            n,
            entries,
            sd_threshold_bits: sd_threshold.to_bits(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sd_threshold(&self) -> f64 {
        f64::from_bits(self.sd_threshold_bits)
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    /// Overlapping pairs `(i, j)` with `i < j`, in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).filter(move |&j| self.get(i, j)).map(move |j| (i, j)))
    }

    pub fn pair_count(&self) -> usize {
        self.pairs().count()
    }

    /// Pairs as a `i\tj` edge list.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, j) in self.pairs() {
            writeln!(w, "{i}\t{j}")?;
        }
        Ok(())
    }
}

/// Inverse of a covariance after flooring its eigenvalues at
/// `max(1e-12, 1e-9 * trace / d)`.
pub fn floored_precision(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows();
    let sym = (cov + cov.transpose()) * 0.5;
    let floor = (1e-9 * sym.trace() / d as f64).max(1e-12);
    let eig = SymmetricEigen::new(sym);
    let inv: DVector<f64> = eig.eigenvalues.map(|l| 1.0 / l.max(floor));
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Squared Mahalanobis length of `delta` under `precision`.
pub fn mahalanobis_sq(precision: &DMatrix<f64>, delta: &DVector<f64>) -> f64 {
    (delta.transpose() * precision * delta)[(0, 0)]
}

/// `F_ij = 1` when each of `i`, `j` lies within `sd_threshold` Mahalanobis
/// units of the other under the other's covariance.
pub fn fuzziness_matrix(unc: &NodeUncertainty, sd_threshold: f64) -> Result<FuzzinessMatrix> {
    if !(sd_threshold >= 0.0) {
        return Err(Error::invalid(format!("sd threshold {sd_threshold} must be nonnegative")));
    }
    let n = unc.n();
    let precisions: Vec<DMatrix<f64>> = unc.covariances.par_iter().map(floored_precision).collect();
    let t2 = sd_threshold * sd_threshold;
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mi = unc.means.row(i).transpose();
            ((i + 1)..n)
                .filter(|&j| {
                    let delta = unc.means.row(j).transpose() - &mi;
                    mahalanobis_sq(&precisions[i], &delta) <= t2 && mahalanobis_sq(&precisions[j], &delta) <= t2
                })
                .collect()
        })
        .collect();
    FuzzinessMatrix::from_pairs(
        n,
        rows.into_iter()
            .enumerate()
            .flat_map(|(i, js)| js.into_iter().map(move |j| (i, j))),
        sd_threshold,
    )
}

/// Population variance of layout distances over overlapping pairs `i < j`.
pub fn fuzziness_score(layout: &Layout2D, f: &FuzzinessMatrix) -> Result<f64> {
    if layout.n() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            found: layout.n(),
        });
    }
    let pos = layout.positions();
    let lengths: Vec<f64> = f
        .pairs()
        .map(|(i, j)| (pos.row(i) - pos.row(j)).norm())
        .collect();
    if lengths.is_empty() {
        return Err(Error::invalid("no overlapping pairs: fuzziness score is undefined"));
    }
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    Ok(lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / lengths.len() as f64)
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    node: String,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

/// JSON array with one `{node, mean, cov}` object per node.
pub fn write_node_uncertainty_json<W: Write>(unc: &NodeUncertainty, labels: Option<&[String]>, w: W) -> Result<()> {
    let records: Vec<NodeRecord> = (0..unc.n())
        .map(|i| NodeRecord {
            node: labels.map_or_else(|| i.to_string(), |l| l[i].clone()),
            mean: unc.means.row(i).iter().copied().collect(),
            cov: unc.covariances[i]
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        })
        .collect();
    serde_json::to_writer_pretty(w, &records)?;
    Ok(())
}
