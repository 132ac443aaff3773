//! Exact t-SNE for layouts of a few thousand nodes at most.
//!
//! Nodes are described by their adjacency rows. Input affinities are
//! Gaussian with a per-node bandwidth matched to the perplexity, output
//! affinities use the Student-t kernel, and the KL divergence is minimized by
//! gradient descent with momentum, per-coordinate gains and early
//! exaggeration.

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fuzziness_score, FuzzinessMatrix, Layout2D, LayoutSource};
use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::rng::{derived_rng, tag};

const ENTROPY_TOL: f64 = 1e-4;
const BANDWIDTH_STEPS: usize = 200;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    /// `None` means `n / 12`.
    pub learning_rate: Option<f64>,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    /// Standard deviation of the Gaussian initialization.
    pub init_sd: f64,
    pub adaptive_gains: bool,
    /// Record the (unexaggerated) KL divergence after every iteration.
    pub record_kl: bool,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            learning_rate: None,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            init_sd: 1e-4,
            adaptive_gains: true,
            record_kl: false,
        }
    }
}

impl TsneConfig {
    pub fn with_perplexity(perplexity: f64) -> Self {
        Self {
            perplexity,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsneRun {
    pub layout: Layout2D,
    /// Raw (unstandardized) embedding.
    pub raw: DMatrix<f64>,
    pub kl_history: Vec<f64>,
}

/// Squared Euclidean distances between adjacency rows:
/// `deg_i + deg_j - 2 |N(i) & N(j)|`.
pub fn adjacency_sq_distances(a: &AdjacencyMatrix) -> DMatrix<f64> {
    let n = a.n();
    let dense = a.to_dense();
    let common = &dense * &dense;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (a.degree(i) + a.degree(j)) as f64 - 2.0 * common[(i, j)]
        }
    })
}

/// Conditional distribution `p_{j|i}` for one row of squared distances, with
/// the precision `beta = 1 / (2 sigma^2)` chosen so the Shannon entropy (in
/// nats) matches `ln(perplexity)`. Returns the row and its entropy.
pub(crate) fn conditional_row(dist: &[f64], i: usize, perplexity: f64) -> (Vec<f64>, f64) {
    let target = perplexity.ln();
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut row = vec![0.0; dist.len()];
    let mut entropy = 0.0;
    // distances are shifted by the row minimum so exp() cannot underflow to
    // an all-zero row; this leaves the normalized distribution unchanged
    let dmin = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    for _ in 0..BANDWIDTH_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for (j, &d) in dist.iter().enumerate() {
            let v = if j == i { 0.0 } else { (-(d - dmin) * beta).exp() };
            row[j] = v;
            sum += v;
            weighted += (d - dmin) * v;
        }
        entropy = sum.ln() + beta * weighted / sum;
        for v in row.iter_mut() {
            *v /= sum;
        }
        let diff = entropy - target;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    (row, entropy)
}

/// Symmetrized joint input affinities `(p_{j|i} + p_{i|j}) / (2n)`.
pub(crate) fn joint_affinities(dist: &DMatrix<f64>, perplexity: f64) -> DMatrix<f64> {
    let n = dist.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d: Vec<f64> = dist.row(i).iter().copied().collect();
            conditional_row(&d, i, perplexity).0
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            ((rows[i][j] + rows[j][i]) / (2.0 * n as f64)).max(P_FLOOR)
        }
    })
}

fn student_kernel(y: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = y.nrows();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            let mut s = 0.0;
            for (j, v) in row.iter_mut().enumerate() {
                if j != i {
                    let dx = y[(i, 0)] - y[(j, 0)];
                    let dy = y[(i, 1)] - y[(j, 1)];
                    *v = 1.0 / (1.0 + dx * dx + dy * dy);
                    s += *v;
                }
            }
            (row, s)
        })
        .collect();
    let total: f64 = rows.iter().map(|(_, s)| s).sum();
    let num = DMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
    (num, total)
}

fn kl_divergence(p: &DMatrix<f64>, num: &DMatrix<f64>, total: f64) -> f64 {
    let n = p.nrows();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let q = (num[(i, j)] / total).max(P_FLOOR);
                kl += p[(i, j)] * (p[(i, j)] / q).ln();
            }
        }
    }
    kl
}

fn check_perplexity(n: usize, perplexity: f64) -> Result<()> {
    if n < 4 {
        return Err(Error::invalid(format!("t-SNE needs at least 4 nodes, got {n}")));
    }
    if !(perplexity > 1.0 && perplexity < n as f64) {
        return Err(Error::invalid(format!(
            "perplexity {perplexity} must lie strictly between 1 and n = {n}"
        )));
    }
    Ok(())
}

/// t-SNE from a matrix of squared input distances.
pub fn tsne_run(sq_dist: &DMatrix<f64>, cfg: &TsneConfig, seed: u64) -> Result<TsneRun> {
    let n = sq_dist.nrows();
    check_perplexity(n, cfg.perplexity)?;
    let p = joint_affinities(sq_dist, cfg.perplexity);
    let lr = cfg.learning_rate.unwrap_or(n as f64 / 12.0);

    let mut rng = derived_rng(seed, &[tag::TSNE]);
    let normal = Normal::new(0.0, cfg.init_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut y = DMatrix::from_fn(n, 2, |_, _| normal.sample(&mut rng));
    let mut velocity = DMatrix::<f64>::zeros(n, 2);
    let mut gains = DMatrix::<f64>::from_element(n, 2, 1.0);
    let mut kl_history = Vec::new();

    for it in 0..cfg.iterations {
        let exaggeration = if it < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if it < cfg.momentum_switch {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };
        let (num, total) = student_kernel(&y);
        let grad_rows: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    if j != i {
                        let w = (exaggeration * p[(i, j)] - num[(i, j)] / total) * num[(i, j)];
                        g[0] += w * (y[(i, 0)] - y[(j, 0)]);
                        g[1] += w * (y[(i, 1)] - y[(j, 1)]);
                    }
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for (i, g) in grad_rows.iter().enumerate() {
            for c in 0..2 {
                if cfg.adaptive_gains {
                    let same_sign = (g[c] > 0.0) == (velocity[(i, c)] > 0.0);
                    gains[(i, c)] = if same_sign {
                        (gains[(i, c)] * 0.8).max(MIN_GAIN)
                    } else {
                        gains[(i, c)] + 0.2
                    };
                }
                velocity[(i, c)] = momentum * velocity[(i, c)] - lr * gains[(i, c)] * g[c];
                y[(i, c)] += velocity[(i, c)];
            }
        }
        // keep the cloud centred; the objective is translation invariant
        for c in 0..2 {
            let mean = y.column(c).mean();
            y.column_mut(c).add_scalar_mut(-mean);
        }
        if cfg.record_kl {
            let (num, total) = student_kernel(&y);
            kl_history.push(kl_divergence(&p, &num, total));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence {
            iterations: cfg.iterations,
            residual: f64::NAN,
        });
    }
    let layout = Layout2D::standardized(y.clone(), LayoutSource::TsneInternal)?;
    Ok(TsneRun {
        layout,
        raw: y,
        kl_history,
    })
}

/// t-SNE layout of the adjacency rows of `a` with default settings.
pub fn tsne_layout(a: &AdjacencyMatrix, perplexity: f64, seed: u64, iterations: usize) -> Result<Layout2D> {
    let cfg = TsneConfig {
        perplexity,
        iterations,
        ..TsneConfig::default()
    };
    tsne_layout_with(a, &cfg, seed)
}

pub fn tsne_layout_with(a: &AdjacencyMatrix, cfg: &TsneConfig, seed: u64) -> Result<Layout2D> {
    check_perplexity(a.n(), cfg.perplexity)?;
    tsne_run(&adjacency_sq_distances(a), cfg, seed).map(|r| r.layout)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityScan {
    /// `(perplexity, fuzziness score)` in increasing perplexity order.
    pub points: Vec<(f64, f64)>,
    /// Index into `points` of the smallest score (first on ties).
    pub argmin: usize,
}

impl PerplexityScan {
    pub fn best_perplexity(&self) -> f64 {
        self.points[self.argmin].0
    }
}

/// Fuzziness score of the t-SNE layout at each perplexity, against a fixed
/// overlap matrix.
pub fn perplexity_scan(
    a: &AdjacencyMatrix,
    f: &FuzzinessMatrix,
    perplexities: &[f64],
    seed: u64,
    base: &TsneConfig,
) -> Result<PerplexityScan> {
    if perplexities.is_empty() {
        return Err(Error::invalid("perplexity scan needs at least one value"));
    }
    let mut sorted = perplexities.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &p in &sorted {
        check_perplexity(a.n(), p)?;
    }
    let dist = adjacency_sq_distances(a);
    let points = sorted
        .iter()
        .map(|&perplexity| {
            let cfg = TsneConfig { perplexity, ..*base };
            let run = tsne_run(&dist, &cfg, seed)?;
            Ok((perplexity, fuzziness_score(&run.layout, f)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let argmin = points
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.1 < points[best].1 { i } else { best });
    Ok(PerplexityScan { points, argmin })
}
