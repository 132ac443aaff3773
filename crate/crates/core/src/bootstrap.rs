//! Estimating edge probabilities from a single observed network and drawing
//! bootstrap replicates.
//!
//! * [`knn_phat`]: each node's probability row is the mean adjacency row of
//!   its `k` nearest embedded neighbours (itself included).
//! * [`xxt_phat`]: the clipped outer product of the ASE.
//! * [`eswr_bootstrap`] / [`eswr_plus_edges_bootstrap`]: edge-list
//!   resampling baselines.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{self, Embedding, Scaling};
use crate::error::{Error, Result};
use crate::graph::{self, io as graph_io, AdjacencyMatrix, ProbabilityMatrix};
use crate::knn;
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorTag {
    AseKnn,
    ExternalKnn,
    Xxt,
    Eswr,
    EswrPlus,
    /// Resampling from a known probability matrix (synthetic validation only).
    TrueResample,
    /// The observed network returned unchanged.
    Identity,
}

/// Replicates plus the information needed to regenerate them.
#[derive(Debug, Clone)]
pub struct BootstrapBatch {
    pub replicates: Vec<AdjacencyMatrix>,
    pub estimator: EstimatorTag,
    pub phat: Option<ProbabilityMatrix>,
    pub master_seed: u64,
}

impl BootstrapBatch {
    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    /// Seed used for replicate `b`.
    pub fn replicate_seed(master_seed: u64, b: usize) -> u64 {
        rng::derive_seed(master_seed, &[tag::REPLICATE, b as u64])
    }
}

/// Raw (unsymmetrized) kNN estimate: row `i` is the mean of the adjacency
/// rows of `i`'s neighbourhood, so every entry lies on the grid `{0, 1/k, ..., 1}`.
pub fn knn_phat_raw(a: &AdjacencyMatrix, emb: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = a.n();
    if emb.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: emb.nrows(),
        });
    }
    if k <= 1 || k > n {
        return Err(Error::invalid(format!("k = {k} must satisfy 1 < k <= {n}")));
    }
    let hoods = knn::knn_neighborhoods(emb, k)?;
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for (i, hood) in hoods.iter().enumerate() {
        for &j in hood {
            for &l in a.neighbors(j) {
                counts[(i, l)] += 1.0;
            }
        }
    }
    counts /= k as f64;
    Ok(counts)
}

/// kNN probability estimate, symmetrized as `(P + P^T) / 2` with a zero
/// diagonal.
pub fn knn_phat(a: &AdjacencyMatrix, emb: &Embedding, k: usize) -> Result<ProbabilityMatrix> {
    let raw = knn_phat_raw(a, emb.positions(), k)?;
    let n = a.n();
    let sym = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 0.5 * (raw[(i, j)] + raw[(j, i)]) });
    ProbabilityMatrix::new(sym)
}

/// Number of leading eigenvalues inspected when `d` is chosen by the elbow.
pub const AUTO_SPECTRUM_LEN: usize = 30;

/// ASE used for neighbour search. With `d = None` the dimension comes from the
/// scree elbow and the full singular-value scaling is the default, since it
/// is less sensitive to an over-large `d`; with an explicit `d` the default
/// is the usual square-root scaling.
pub fn knn_embedding(a: &AdjacencyMatrix, d: Option<usize>, scaling: Option<Scaling>) -> Result<Embedding> {
    let (d, default_scaling) = match d {
        Some(d) => (d, Scaling::SqrtSigma),
        None => {
            let count = AUTO_SPECTRUM_LEN.min(a.n());
            let spec = embed::spectrum(a, count)?;
            (embed::select_dimension_elbow(&spec)?, Scaling::FullSigma)
        }
    };
    let scaling = scaling.unwrap_or(default_scaling);
    embed::ase_with(a, d, scaling, &embed::EmbedOptions::default()).map(|(e, _)| e)
}

/// [`knn_phat`] on the ASE chosen by [`knn_embedding`].
pub fn ase_knn_phat(
    a: &AdjacencyMatrix,
    k: usize,
    d: Option<usize>,
    scaling: Option<Scaling>,
) -> Result<ProbabilityMatrix> {
    let emb = knn_embedding(a, d, scaling)?;
    knn_phat(a, &emb, k)
}

/// Clipped outer product `clamp(X X^T, 0, 1)` with a zero diagonal.
pub fn phat_from_positions(x: &DMatrix<f64>) -> Result<ProbabilityMatrix> {
    let mut p = x * x.transpose();
    let n = p.nrows();
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = if i == j { 0.0 } else { p[(i, j)].clamp(0.0, 1.0) };
        }
    }
    // X X^T is symmetric up to rounding in the product
    let sym = DMatrix::from_fn(n, n, |i, j| if i <= j { p[(i, j)] } else { p[(j, i)] });
    ProbabilityMatrix::new(sym)
}

/// `clamp(X X^T, 0, 1)` for the `d`-dimensional ASE of `a`.
pub fn xxt_phat(a: &AdjacencyMatrix, d: usize) -> Result<ProbabilityMatrix> {
    let (x, _) = embed::ase(a, d)?;
    phat_from_positions(x.positions())
}

/// `b` independent symmetric Bernoulli draws from `phat`.
pub fn sample_bootstraps(phat: &ProbabilityMatrix, b: usize, seed: u64, estimator: EstimatorTag) -> BootstrapBatch {
    let replicates = (0..b)
        .into_par_iter()
        .map(|r| graph::sample_birg(phat, BootstrapBatch::replicate_seed(seed, r)))
        .collect();
    BootstrapBatch {
        replicates,
        estimator,
        phat: Some(phat.clone()),
        master_seed: seed,
    }
}

fn edge_list_nonempty(a: &AdjacencyMatrix) -> Result<Vec<(usize, usize)>> {
    let edges: Vec<_> = a.edges().collect();
    if edges.is_empty() {
        return Err(Error::invalid("edge-list bootstrap needs at least one edge"));
    }
    Ok(edges)
}

fn eswr_sample(edges: &[(usize, usize)], rng: &mut rng::Rng) -> Vec<(usize, usize)> {
    let mut picked: Vec<(usize, usize)> = (0..edges.len())
        .map(|_| edges[rng.random_range(0..edges.len())])
        .collect();
    picked.sort_unstable();
    picked.dedup();
    picked
}

/// Sample `|E|` edges with replacement and drop duplicates.
pub fn eswr_bootstrap(a: &AdjacencyMatrix, b: usize, seed: u64) -> Result<BootstrapBatch> {
    let edges = edge_list_nonempty(a)?;
    let replicates = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::rng_from_seed(BootstrapBatch::replicate_seed(seed, r));
            AdjacencyMatrix::from_edges(a.n(), eswr_sample(&edges, &mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapBatch {
        replicates,
        estimator: EstimatorTag::Eswr,
        phat: None,
        master_seed: seed,
    })
}

/// Decode a linear index over the strict upper triangle of an `n x n` matrix.
fn pair_from_index(n: usize, mut idx: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
        i += 1;
    }
}

/// ESWR, then top up with uniformly chosen absent pairs until every replicate
/// has exactly `|E|` edges.
pub fn eswr_plus_edges_bootstrap(a: &AdjacencyMatrix, b: usize, seed: u64) -> Result<BootstrapBatch> {
    let edges = edge_list_nonempty(a)?;
    let n = a.n();
    let total_pairs = n * (n - 1) / 2;
    let replicates = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::rng_from_seed(BootstrapBatch::replicate_seed(seed, r));
            let sampled = eswr_sample(&edges, &mut rng);
            let missing = edges.len() - sampled.len();
            let present: HashSet<(usize, usize)> = sampled.iter().copied().collect();
            let free = total_pairs - present.len();
            assert!(missing <= free, "not enough absent pairs to top up");
            let mut added = Vec::with_capacity(missing);
            if missing > 0 {
                // choose `missing` ranks among the absent pairs, then map each
                // rank to a pair by skipping present ones in row-major order
                let mut ranks = index::sample(&mut rng, free, missing).into_vec();
                ranks.sort_unstable();
                let mut present_sorted: Vec<usize> = sampled
                    .iter()
                    .map(|&(i, j)| i * n - i * (i + 1) / 2 + (j - i - 1))
                    .collect();
                present_sorted.sort_unstable();
                let mut skip = 0;
                for rank in ranks {
                    // smallest linear index `x` with x - #(present <= x) == rank
                    let mut x = rank + skip;
                    while skip < present_sorted.len() && present_sorted[skip] <= x {
                        skip += 1;
                        x = rank + skip;
                    }
                    added.push(pair_from_index(n, x));
                }
            }
            AdjacencyMatrix::from_edges(n, sampled.into_iter().chain(added))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapBatch {
        replicates,
        estimator: EstimatorTag::EswrPlus,
        phat: None,
        master_seed: seed,
    })
}

/// A bootstrap procedure, as selected on the command line or in a harness.
#[derive(Debug, Clone, PartialEq)]
pub enum BootstrapMethod {
    /// Fresh draws from the true probability matrix; synthetic models only.
    TrueResample,
    /// Return the observed network itself.
    Identity,
    AseKnn {
        k: usize,
        d: Option<usize>,
        scaling: Option<Scaling>,
    },
    /// kNN estimate on user-supplied node positions.
    ExternalKnn { k: usize, positions: DMatrix<f64> },
    Xxt { d: usize },
    Eswr,
    EswrPlus,
}

impl BootstrapMethod {
    pub fn tag(&self) -> EstimatorTag {
        match self {
            Self::TrueResample => EstimatorTag::TrueResample,
            Self::Identity => EstimatorTag::Identity,
            Self::AseKnn { .. } => EstimatorTag::AseKnn,
            Self::ExternalKnn { .. } => EstimatorTag::ExternalKnn,
            Self::Xxt { .. } => EstimatorTag::Xxt,
            Self::Eswr => EstimatorTag::Eswr,
            Self::EswrPlus => EstimatorTag::EswrPlus,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Self::AseKnn { k, .. } | Self::ExternalKnn { k, .. } => Some(*k),
            _ => None,
        }
    }

    pub fn d(&self) -> Option<usize> {
        match self {
            Self::AseKnn { d, .. } => *d,
            Self::Xxt { d } => Some(*d),
            _ => None,
        }
    }

    /// Probability estimate the replicates are drawn from, when there is one.
    pub fn estimate(&self, a: &AdjacencyMatrix, truth: Option<&ProbabilityMatrix>) -> Result<Option<ProbabilityMatrix>> {
        match self {
            Self::TrueResample => {
                let p = truth.ok_or_else(|| Error::invalid("true resampling needs a known probability matrix"))?;
                if p.n() != a.n() {
                    return Err(Error::DimensionMismatch {
                        expected: a.n(),
                        found: p.n(),
                    });
                }
                Ok(Some(p.clone()))
            }
            Self::AseKnn { k, d, scaling } => ase_knn_phat(a, *k, *d, *scaling).map(Some),
            Self::ExternalKnn { k, positions } => {
                let emb = Embedding::new(positions.clone(), embed::EmbeddingMethod::External, Scaling::SqrtSigma, 1)?;
                knn_phat(a, &emb, *k).map(Some)
            }
            Self::Xxt { d } => xxt_phat(a, *d).map(Some),
            Self::Identity | Self::Eswr | Self::EswrPlus => Ok(None),
        }
    }

    /// `b` replicates of `a`. `truth` is only consulted by
    /// [`BootstrapMethod::TrueResample`].
    pub fn generate(
        &self,
        a: &AdjacencyMatrix,
        truth: Option<&ProbabilityMatrix>,
        b: usize,
        seed: u64,
    ) -> Result<BootstrapBatch> {
        match self {
            Self::Eswr => eswr_bootstrap(a, b, seed),
            Self::EswrPlus => eswr_plus_edges_bootstrap(a, b, seed),
            Self::Identity => Ok(BootstrapBatch {
                replicates: vec![a.clone(); b],
                estimator: EstimatorTag::Identity,
                phat: None,
                master_seed: seed,
            }),
            _ => {
                let phat = self.estimate(a, truth)?.expect("Bernoulli estimators return a matrix");
                Ok(sample_bootstraps(&phat, b, seed, self.tag()))
            }
        }
    }
}

/// `manifest.json` written next to exported replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub estimator: EstimatorTag,
    pub master_seed: u64,
    pub replicate_seeds: Vec<u64>,
    pub n: usize,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub files: Vec<String>,
}

/// Write `replicate_<b>.tsv` edge lists and a `manifest.json` into `dir`.
pub fn export_batch(batch: &BootstrapBatch, dir: &Path, k: Option<usize>, d: Option<usize>) -> Result<BatchManifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(batch.len());
    for (b, rep) in batch.replicates.iter().enumerate() {
        let name = format!("replicate_{b}.tsv");
        let mut buf = Vec::new();
        graph_io::write_edge_list(rep, &mut buf)?;
        crate::write_atomic(&dir.join(&name), &buf)?;
        files.push(name);
    }
    let manifest = BatchManifest {
        estimator: batch.estimator,
        master_seed: batch.master_seed,
        replicate_seeds: (0..batch.len())
            .map(|b| BootstrapBatch::replicate_seed(batch.master_seed, b))
            .collect(),
        n: batch.replicates.first().map_or(0, AdjacencyMatrix::n),
        k,
        d,
        files,
    };
    crate::write_atomic(&dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}
