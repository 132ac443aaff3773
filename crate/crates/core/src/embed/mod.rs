//! Spectral embeddings of one or many networks.
//!
//! * [`ase`]: adjacency spectral embedding `U |S|^{1/2}` from the top-`d`
//!   eigenpairs of `A` by magnitude.
//! * [`uase`]: unfolded embedding `V S^{1/2}` from the rank-`d` truncated SVD
//!   of the column concatenation `(A1, ..., AM)`, returned as `M` stacked
//!   blocks of `n` rows.
//! * [`dilated_unfolded_embed`]: any single-network embedder applied to the
//!   symmetric dilation `[0 U; U^T 0]` of the unfolding.
//!
//! The unfolded SVD is computed through the `n x n` Gram matrix
//! `sum_m A_m A_m`, whose entries are integer path counts and therefore exact
//! in floating point. Right singular blocks follow as
//! `V_m S^{1/2} = A_m U S^{-1/2}`.

mod elbow;
mod io;

use std::borrow::Borrow;

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::linalg::{self, Backend, EigenPairs, LanczosConfig, SymmetricOperator};

pub use elbow::select_dimension_elbow;
pub use io::{load_external_embedding, read_embedding_csv, write_embedding_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingMethod {
    Ase,
    Uase,
    DilatedAse,
    Dilated,
    External,
}

/// How singular values weight the singular vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// `U |S|^{1/2}`.
    #[default]
    SqrtSigma,
    /// `U |S|`; less sensitive to an over-large `d` for neighbourhood search.
    FullSigma,
}

/// Node positions, optionally stacked as equal-sized per-network blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    positions: DMatrix<f64>,
    method: EmbeddingMethod,
    scaling: Scaling,
    blocks: usize,
}

impl Embedding {
    pub fn new(
        positions: DMatrix<f64>,
        method: EmbeddingMethod,
        scaling: Scaling,
        blocks: usize,
    ) -> Result<Self> {
        if positions.ncols() == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if blocks == 0 || positions.nrows() % blocks != 0 {
            return Err(Error::invalid(format!(
                "{} rows cannot be split into {blocks} equal blocks",
                positions.nrows()
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("embedding contains non-finite entries"));
        }
        Ok(Self {
            positions,
            method,
            scaling,
            blocks,
        })
    }

    pub fn positions(&self) -> &DMatrix<f64> {
        &self.positions
    }

    pub fn into_positions(self) -> DMatrix<f64> {
        self.positions
    }

    pub fn d(&self) -> usize {
        self.positions.ncols()
    }

    pub fn rows(&self) -> usize {
        self.positions.nrows()
    }

    pub fn method(&self) -> EmbeddingMethod {
        self.method
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Rows per block (the node count for multi-network embeddings).
    pub fn block_rows(&self) -> usize {
        self.positions.nrows() / self.blocks
    }

    /// Row range of block `m`.
    pub fn block_range(&self, m: usize) -> std::ops::Range<usize> {
        let r = self.block_rows();
        m * r..(m + 1) * r
    }

    pub fn block(&self, m: usize) -> DMatrixView<'_, f64> {
        let r = self.block_rows();
        self.positions.rows(m * r, r)
    }
}

/// Magnitudes (ASE: eigenvalues, UASE: singular values) in decreasing
/// magnitude order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumInfo {
    pub values: Vec<f64>,
    pub d_selected: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EmbedOptions {
    pub backend: Backend,
    pub lanczos: LanczosConfig,
}

fn check_dimension(d: usize, n: usize) -> Result<()> {
    if d == 0 || d > n {
        return Err(Error::invalid(format!(
            "embedding dimension {d} must lie in 1..={n}"
        )));
    }
    Ok(())
}

impl SymmetricOperator for AdjacencyMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec(x, y);
    }
}

fn top_eigenpairs(a: &AdjacencyMatrix, d: usize, opts: &EmbedOptions) -> Result<EigenPairs> {
    if opts.backend.use_dense(a.n()) {
        Ok(linalg::dense_top_eigenpairs(&a.to_dense(), d))
    } else {
        linalg::lanczos_top_eigenpairs(a, d, &opts.lanczos)
    }
}

fn scale_columns(vectors: &DMatrix<f64>, values: &[f64], power: f64) -> DMatrix<f64> {
    let mut out = vectors.clone();
    for (c, v) in values.iter().enumerate() {
        let s = v.abs().powf(power);
        out.column_mut(c).scale_mut(s);
    }
    out
}

/// Adjacency spectral embedding `X = U |S|^{1/2}`.
pub fn ase(a: &AdjacencyMatrix, d: usize) -> Result<(Embedding, SpectrumInfo)> {
    ase_with(a, d, Scaling::SqrtSigma, &EmbedOptions::default())
}

/// ASE with the alternative full singular-value weighting `U |S|`.
pub fn ase_alternative_scaling(a: &AdjacencyMatrix, d: usize) -> Result<Embedding> {
    ase_with(a, d, Scaling::FullSigma, &EmbedOptions::default()).map(|(e, _)| e)
}

pub fn ase_with(
    a: &AdjacencyMatrix,
    d: usize,
    scaling: Scaling,
    opts: &EmbedOptions,
) -> Result<(Embedding, SpectrumInfo)> {
    check_dimension(d, a.n())?;
    let pairs = top_eigenpairs(a, d, opts)?;
    let power = match scaling {
        Scaling::SqrtSigma => 0.5,
        Scaling::FullSigma => 1.0,
    };
    let positions = scale_columns(&pairs.vectors, &pairs.values, power);
    let emb = Embedding::new(positions, EmbeddingMethod::Ase, scaling, 1)?;
    Ok((
        emb,
        SpectrumInfo {
            values: pairs.values,
            d_selected: Some(d),
        },
    ))
}

/// The `count` largest-magnitude eigenvalues of `a`, for scree inspection.
pub fn spectrum(a: &AdjacencyMatrix, count: usize) -> Result<SpectrumInfo> {
    check_dimension(count, a.n())?;
    let pairs = top_eigenpairs(a, count, &EmbedOptions::default())?;
    Ok(SpectrumInfo {
        values: pairs.values,
        d_selected: None,
    })
}

/// `sum_m A_m x` applied twice: the Gram operator of the unfolding.
struct UnfoldedGram<'a> {
    networks: Vec<&'a AdjacencyMatrix>,
}

impl SymmetricOperator for UnfoldedGram<'_> {
    fn dim(&self) -> usize {
        self.networks[0].n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        let mut tmp = vec![0.0; n];
        let mut acc = vec![0.0; n];
        y.iter_mut().for_each(|v| *v = 0.0);
        for a in &self.networks {
            a.mul_vec(x, &mut tmp);
            a.mul_vec(&tmp, &mut acc);
            y.iter_mut().zip(&acc).for_each(|(v, w)| *v += w);
        }
    }
}

fn dense_unfolded_gram(networks: &[&AdjacencyMatrix]) -> DMatrix<f64> {
    let n = networks[0].n();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for a in networks {
        for j in 0..n {
            let nb = a.neighbors(j);
            for &i in nb {
                for &l in nb {
                    g[(i, l)] += 1.0;
                }
            }
        }
    }
    g
}

fn check_networks<N: Borrow<AdjacencyMatrix>>(networks: &[N], d: usize) -> Result<Vec<&AdjacencyMatrix>> {
    let nets: Vec<&AdjacencyMatrix> = networks.iter().map(|a| a.borrow()).collect();
    let first = nets
        .first()
        .ok_or_else(|| Error::invalid("at least one network is required"))?;
    let n = first.n();
    if let Some(bad) = nets.iter().find(|a| a.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.n(),
        });
    }
    check_dimension(d, n)?;
    Ok(nets)
}

/// Unfolded adjacency spectral embedding of `M` networks on a shared node set.
pub fn uase<N: Borrow<AdjacencyMatrix>>(networks: &[N], d: usize) -> Result<(Embedding, SpectrumInfo)> {
    uase_with(networks, d, &EmbedOptions::default())
}

pub fn uase_with<N: Borrow<AdjacencyMatrix>>(
    networks: &[N],
    d: usize,
    opts: &EmbedOptions,
) -> Result<(Embedding, SpectrumInfo)> {
    let nets = check_networks(networks, d)?;
    let n = nets[0].n();
    let pairs = if opts.backend.use_dense(n) {
        linalg::dense_top_eigenpairs(&dense_unfolded_gram(&nets), d)
    } else {
        linalg::lanczos_top_eigenpairs(&UnfoldedGram { networks: nets.clone() }, d, &opts.lanczos)?
    };
    let sigma: Vec<f64> = pairs.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let cutoff = sigma.first().copied().unwrap_or(0.0) * 1e-12;
    let inv_sqrt: Vec<f64> = sigma
        .iter()
        .map(|&s| if s > cutoff && s > 0.0 { 1.0 / s.sqrt() } else { 0.0 })
        .collect();
    let mut positions = DMatrix::zeros(n * nets.len(), d);
    for (m, a) in nets.iter().enumerate() {
        let mut block = a.mul_mat(&pairs.vectors);
        for (c, &w) in inv_sqrt.iter().enumerate() {
            block.column_mut(c).scale_mut(w);
        }
        positions.rows_mut(m * n, n).copy_from(&block);
    }
    let emb = Embedding::new(positions, EmbeddingMethod::Uase, Scaling::SqrtSigma, nets.len())?;
    Ok((
        emb,
        SpectrumInfo {
            values: sigma,
            d_selected: Some(d),
        },
    ))
}

/// A single-network embedder usable on a dilated unfolding.
pub trait SingleNetworkEmbedder: Sync {
    fn embed(&self, a: &AdjacencyMatrix, d: usize) -> Result<DMatrix<f64>>;
}

/// ASE as a [`SingleNetworkEmbedder`].
#[derive(Debug, Clone, Copy, Default)]
pub struct AseEmbedder {
    pub options: EmbedOptions,
}

impl SingleNetworkEmbedder for AseEmbedder {
    fn embed(&self, a: &AdjacencyMatrix, d: usize) -> Result<DMatrix<f64>> {
        ase_with(a, d, Scaling::SqrtSigma, &self.options).map(|(e, _)| e.into_positions())
    }
}

/// Symmetric dilation `[0 U; U^T 0]` of the unfolding `U = (A1, ..., AM)`,
/// as a graph on `n (M + 1)` nodes: the first `n` are anchors, followed by
/// one block of `n` per network.
pub fn dilation<N: Borrow<AdjacencyMatrix>>(networks: &[N]) -> Result<AdjacencyMatrix> {
    let nets = check_networks(networks, 1)?;
    let n = nets[0].n();
    let edges = nets.iter().enumerate().flat_map(|(m, a)| {
        let offset = n * (m + 1);
        (0..n).flat_map(move |i| a.neighbors(i).iter().map(move |&j| (i, offset + j)))
    });
    AdjacencyMatrix::from_edges(n * (nets.len() + 1), edges)
}

/// Embed the dilation of the unfolding with `embedder` and return the
/// multi-network block (all rows after the first `n`).
///
/// ASE spectra of a dilation come in `+s / -s` pairs, so ASE at dimension
/// `2d` reproduces the Gram matrix of the `d`-dimensional [`uase`].
pub fn dilated_unfolded_embed<N: Borrow<AdjacencyMatrix>>(
    networks: &[N],
    d: usize,
    embedder: &dyn SingleNetworkEmbedder,
) -> Result<Embedding> {
    let nets = check_networks(networks, 1)?;
    let n = nets[0].n();
    let dil = dilation(&nets)?;
    check_dimension(d, dil.n())?;
    let full = embedder.embed(&dil, d)?;
    if full.nrows() != dil.n() {
        return Err(Error::DimensionMismatch {
            expected: dil.n(),
            found: full.nrows(),
        });
    }
    let y = full.rows(n, n * nets.len()).into_owned();
    Embedding::new(y, EmbeddingMethod::Dilated, Scaling::SqrtSigma, nets.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_birg, sbm_probability_matrix, SbmSpec};
    use crate::linalg::max_principal_angle_sin;

    fn two_block(n: usize, seed: u64) -> AdjacencyMatrix {
        let b = DMatrix::from_row_slice(2, 2, &[0.6, 0.15, 0.15, 0.45]);
        let spec = SbmSpec::with_random_assignment(b, n, seed).unwrap();
        sample_birg(&sbm_probability_matrix(&spec), seed + 1)
    }

    #[test]
    fn complete_graph_rank_one() {
        let (x, s) = ase(&AdjacencyMatrix::complete(3), 1).unwrap();
        assert!((s.values[0] - 2.0).abs() < 1e-12);
        let expected = 2f64.sqrt() / 3f64.sqrt();
        for i in 0..3 {
            assert!((x.positions()[(i, 0)] - expected).abs() < 1e-12);
        }
        let alt = ase_alternative_scaling(&AdjacencyMatrix::complete(3), 1).unwrap();
        for i in 0..3 {
            assert!((alt.positions()[(i, 0)] - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_out_of_range() {
        let a = AdjacencyMatrix::complete(4);
        assert!(ase(&a, 0).is_err());
        assert!(ase(&a, 5).is_err());
        assert!(uase(&[a.clone()], 5).is_err());
    }

    #[test]
    fn alternative_scaling_column_ratio() {
        let a = two_block(60, 4);
        let (x, s) = ase(&a, 3).unwrap();
        let y = ase_alternative_scaling(&a, 3).unwrap();
        for c in 0..3 {
            let ratio = y.positions().column(c).norm() / x.positions().column(c).norm();
            assert!((ratio - s.values[c].abs().sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn full_dimension_reconstructs_adjacency() {
        let a = two_block(40, 8);
        let (x, s) = ase(&a, 40).unwrap();
        let signs = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            40,
            s.values.iter().map(|v| v.signum()),
        ));
        let recon = x.positions() * signs * x.positions().transpose();
        assert!((recon - a.to_dense()).abs().max() < 1e-8);
    }

    #[test]
    fn spectrum_is_nonincreasing_in_magnitude() {
        let s = spectrum(&two_block(80, 2), 10).unwrap();
        for w in s.values.windows(2) {
            assert!(w[0].abs() >= w[1].abs());
        }
    }

    #[test]
    fn uase_duplicated_network_blocks_identical() {
        let a = two_block(50, 1);
        let (y, _) = uase(&[a.clone(), a.clone()], 2).unwrap();
        assert_eq!(y.block(0), y.block(1));
        assert_eq!(y.blocks(), 2);
    }

    #[test]
    fn uase_shape() {
        let nets: Vec<_> = (0..3).map(|s| two_block(50, 10 + s)).collect();
        let (y, _) = uase(&nets, 2).unwrap();
        assert_eq!(y.rows(), 150);
        assert_eq!(y.block_range(2), 100..150);
    }

    #[test]
    fn uase_rejects_size_mismatch() {
        let err = uase(&[two_block(10, 1), two_block(12, 1)], 2).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn single_network_uase_spans_ase() {
        let a = two_block(80, 6);
        let (x, _) = ase(&a, 2).unwrap();
        let (y, _) = uase(&[a], 2).unwrap();
        assert!(max_principal_angle_sin(x.positions(), y.positions()) < 1e-8);
    }

    #[test]
    fn lanczos_and_dense_uase_agree() {
        let nets = [two_block(70, 3), two_block(70, 5)];
        let dense = uase_with(&nets, 2, &EmbedOptions { backend: Backend::Dense, ..Default::default() }).unwrap();
        let iter = uase_with(&nets, 2, &EmbedOptions { backend: Backend::Lanczos, ..Default::default() }).unwrap();
        assert!(max_principal_angle_sin(dense.0.positions(), iter.0.positions()) < 1e-8);
        for (a, b) in dense.1.values.iter().zip(&iter.1.values) {
            assert!((a - b).abs() < 1e-8 * a);
        }
    }

    #[test]
    fn dilation_structure() {
        let a = AdjacencyMatrix::from_edges(2, [(0, 1)]).unwrap();
        let dil = dilation(&[a]).unwrap().to_dense();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[0., 0., 0., 1., 0., 0., 1., 0., 0., 1., 0., 0., 1., 0., 0., 0.],
        );
        assert_eq!(dil, expected);
    }

    #[test]
    fn dilated_ase_duplicated_networks() {
        let a = two_block(40, 12);
        let y = dilated_unfolded_embed(&[a.clone(), a], 4, &AseEmbedder::default()).unwrap();
        assert!((y.block(0) - y.block(1)).abs().max() < 1e-10);
    }
}
