use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma};

use super::{AdjacencyMatrix, ProbabilityMatrix};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

fn check_block_matrix(b: &DMatrix<f64>) -> Result<()> {
    if b.nrows() != b.ncols() || b.nrows() == 0 {
        return Err(Error::invalid("block matrix must be square and nonempty"));
    }
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            let v = b[(i, j)];
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!(
                    "block probability {v} at ({i}, {j}) outside [0, 1]"
                )));
            }
            if v != b[(j, i)] {
                return Err(Error::invalid("block matrix must be symmetric"));
            }
        }
    }
    Ok(())
}

/// Stochastic block model with a fixed community assignment.
///
/// Communities are 0-based internally (`0..C`).
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    block_matrix: DMatrix<f64>,
    assignment: Vec<usize>,
}

impl SbmSpec {
    pub fn new(block_matrix: DMatrix<f64>, assignment: Vec<usize>) -> Result<Self> {
        check_block_matrix(&block_matrix)?;
        let c = block_matrix.nrows();
        if let Some((i, &t)) = assignment.iter().enumerate().find(|(_, &t)| t >= c) {
            return Err(Error::invalid(format!(
                "node {i} assigned to community {t}, but only {c} communities exist"
            )));
        }
        Ok(Self {
            block_matrix,
            assignment,
        })
    }

    /// Each node joins a community uniformly at random.
    pub fn with_random_assignment(block_matrix: DMatrix<f64>, n: usize, seed: u64) -> Result<Self> {
        check_block_matrix(&block_matrix)?;
        let c = block_matrix.nrows();
        let mut rng = rng::rng_from_seed(seed);
        let assignment = (0..n).map(|_| rng.random_range(0..c)).collect();
        Self::new(block_matrix, assignment)
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn communities(&self) -> usize {
        self.block_matrix.nrows()
    }

    pub fn block_matrix(&self) -> &DMatrix<f64> {
        &self.block_matrix
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

/// `P[i, j] = B[tau_i, tau_j]`. The diagonal keeps its block value but is
/// never sampled.
pub fn sbm_probability_matrix(spec: &SbmSpec) -> ProbabilityMatrix {
    let tau = &spec.assignment;
    let b = &spec.block_matrix;
    let n = tau.len();
    let entries = DMatrix::from_fn(n, n, |i, j| b[(tau[i], tau[j])]);
    ProbabilityMatrix { entries }
}

/// Draw `A[i, j] ~ Bernoulli(P[i, j])` independently for `i < j`, mirrored to
/// the lower triangle.
pub fn sample_birg(p: &ProbabilityMatrix, seed: u64) -> AdjacencyMatrix {
    let mut rng = rng::rng_from_seed(seed);
    sample_birg_with(p, &mut rng)
}

pub(crate) fn sample_birg_with(p: &ProbabilityMatrix, rng: &mut Rng) -> AdjacencyMatrix {
    let n = p.n();
    let mut upper = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p.get(i, j) {
                upper.push((i, j));
            }
        }
    }
    AdjacencyMatrix::from_sorted_upper(n, upper)
}

/// Mixed-membership stochastic block model.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsbmSpec {
    n: usize,
    alpha: Vec<f64>,
    block_matrix: DMatrix<f64>,
}

impl MmsbmSpec {
    pub fn new(n: usize, alpha: Vec<f64>, block_matrix: DMatrix<f64>) -> Result<Self> {
        check_block_matrix(&block_matrix)?;
        if alpha.len() != block_matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: block_matrix.nrows(),
                found: alpha.len(),
            });
        }
        if alpha.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
            return Err(Error::invalid("Dirichlet concentrations must be positive and finite"));
        }
        Ok(Self {
            n,
            alpha,
            block_matrix,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn block_matrix(&self) -> &DMatrix<f64> {
        &self.block_matrix
    }
}

fn sample_dirichlet(alpha: &[f64], rng: &mut Rng) -> Vec<f64> {
    let mut draws: Vec<f64> = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("validated shape").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        draws.iter_mut().for_each(|x| *x /= total);
    } else {
        // every gamma draw underflowed; fall back to the dominant component
        let top = alpha
            .iter()
            .enumerate()
            .fold(0, |best, (i, &a)| if a > alpha[best] { i } else { best });
        draws.iter_mut().enumerate().for_each(|(i, x)| *x = (i == top) as u8 as f64);
    }
    draws
}

fn sample_category(weights: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (c, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return c;
        }
    }
    // rounding left the cumulative sum just short of 1
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Sample an MMSBM network together with its realized pair probabilities.
///
/// Membership indicators are drawn once per unordered pair `i < j`, so the
/// returned probability matrix satisfies `P[i, j] = B[g, h]` for the drawn
/// initiator community `g` of `i` and receiver community `h` of `j`. The
/// diagonal of `P` is zero.
pub fn sample_mmsbm(spec: &MmsbmSpec, seed: u64) -> (AdjacencyMatrix, ProbabilityMatrix) {
    let mut rng = rng::rng_from_seed(seed);
    let n = spec.n;
    let memberships: Vec<Vec<f64>> = (0..n).map(|_| sample_dirichlet(&spec.alpha, &mut rng)).collect();
    let mut p = DMatrix::zeros(n, n);
    let mut upper = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let g = sample_category(&memberships[i], &mut rng);
            let h = sample_category(&memberships[j], &mut rng);
            let pij = spec.block_matrix[(g, h)];
            p[(i, j)] = pij;
            p[(j, i)] = pij;
            if rng.random::<f64>() < pij {
                upper.push((i, j));
            }
        }
    }
    (
        AdjacencyMatrix::from_sorted_upper(n, upper),
        ProbabilityMatrix { entries: p },
    )
}
