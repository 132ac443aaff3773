//! Binary symmetric graphs, edge-probability matrices and the random graph
//! generators built on them.

mod generators;
pub mod io;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use generators::{
    sample_birg, sample_mmsbm, sbm_probability_matrix, MmsbmSpec, SbmSpec,
};

/// Undirected simple graph stored in compressed sparse row form.
///
/// Rows hold sorted neighbour lists, the adjacency is symmetric and the
/// diagonal is always empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    node_labels: Option<Vec<String>>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
            node_labels: None,
        }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_sorted_upper(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))
    }

    /// Build from an edge list. Edges are symmetrized and duplicates collapsed;
    /// self-loops are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut upper = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u != v {
                upper.push((u.min(v), u.max(v)));
            }
        }
        upper.sort_unstable();
        upper.dedup();
        Ok(Self::from_sorted_upper(n, upper))
    }

    /// `upper` must be strictly upper-triangular pairs without duplicates.
    fn from_sorted_upper<I>(n: usize, upper: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in upper {
            rows[u].push(v);
            rows[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut row in rows {
            row.sort_unstable();
            neighbors.extend_from_slice(&row);
            offsets.push(neighbors.len());
        }
        Self {
            n,
            offsets,
            neighbors,
            node_labels: None,
        }
    }

    /// Build from a dense 0/1 matrix, rejecting anything that is not a simple
    /// undirected graph.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid("adjacency matrix must be square"));
        }
        let n = m.nrows();
        let mut upper = Vec::new();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at node {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if a != b {
                    return Err(Error::invalid(format!("asymmetric entry ({i}, {j})")));
                }
                match a {
                    x if x == 0.0 => {}
                    x if x == 1.0 => upper.push((i, j)),
                    x => {
                        return Err(Error::invalid(format!(
                            "non-binary entry {x} at ({i}, {j})"
                        )))
                    }
                }
            }
        }
        Ok(Self::from_sorted_upper(n, upper))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: labels.len(),
            });
        }
        let mut seen = std::collections::HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::invalid(format!("duplicate node label {l:?}")));
            }
        }
        self.node_labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_labels(&self) -> Option<&[String]> {
        self.node_labels.as_deref()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Undirected edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    /// Edge density over the `n(n-1)/2` off-diagonal pairs.
    pub fn density(&self) -> f64 {
        let pairs = self.n * self.n.saturating_sub(1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.edge_count() as f64 / pairs as f64
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for &j in self.neighbors(i) {
                m[(i, j)] = 1.0;
            }
        }
        m
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.neighbors(i).iter().map(|&j| x[j]).sum();
        }
    }

    /// `A X` for a dense `n x d` block.
    pub fn mul_mat(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            for i in 0..self.n {
                out[(i, c)] = self.neighbors(i).iter().map(|&j| col[j]).sum();
            }
        }
        out
    }
}

/// Dense matrix of Bernoulli edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    entries: DMatrix<f64>,
}

impl ProbabilityMatrix {
    /// Validates squareness, finiteness, range `[0, 1]` and symmetry.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::invalid("probability matrix must be square"));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in 0..n {
                let p = entries[(i, j)];
                if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(format!(
                        "probability {p} at ({i}, {j}) outside [0, 1]"
                    )));
                }
                if j > i && (p - entries[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "probability matrix asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn constant(n: usize, p: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(n, n, p))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Mean over the strict upper triangle.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.n();
        let pairs = n * n.saturating_sub(1) / 2;
        if pairs == 0 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += self.entries[(i, j)];
            }
        }
        s / pairs as f64
    }

    /// True when every entry is exactly 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.entries.iter().all(|&p| p == 0.0 || p == 1.0)
    }
}
