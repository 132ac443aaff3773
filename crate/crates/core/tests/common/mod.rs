//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netboot::graph::{sample_birg, sbm_probability_matrix, SbmSpec};
use netboot::AdjacencyMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Balanced two-block SBM specification.
pub fn two_block_spec(n: usize, p_in: f64, p_out: f64) -> SbmSpec {
    let b = DMatrix::from_row_slice(2, 2, &[p_in, p_out, p_out, p_in]);
    SbmSpec::new(b, (0..n).map(|i| usize::from(i >= n / 2)).collect()).unwrap()
}

pub fn two_block_graph(n: usize, p_in: f64, p_out: f64, seed: u64) -> AdjacencyMatrix {
    sample_birg(&sbm_probability_matrix(&two_block_spec(n, p_in, p_out)), seed)
}

/// The four-community block matrix used for the clustered SBM example.
pub fn four_block_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.7, 0.4, 0.2, 0.5, //
            0.4, 0.6, 0.3, 0.2, //
            0.2, 0.3, 0.8, 0.4, //
            0.5, 0.2, 0.4, 0.9,
        ],
    )
}

pub fn mmsbm_block_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.3, 0.2, 0.2, 0.2, 0.6, 0.2, 0.2, 0.2, 0.9])
}

/// Erdos-Renyi graph from an explicit coin per pair.
pub fn random_graph(n: usize, p: f64, seed: u64) -> AdjacencyMatrix {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if r.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    AdjacencyMatrix::from_edges(n, edges).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| r.random::<f64>() * 2.0 - 1.0)
}

/// Top-`d` eigenpairs by magnitude from a full dense decomposition.
pub fn dense_ase(a: &DMatrix<f64>, d: usize) -> (DMatrix<f64>, Vec<f64>) {
    let eig = a.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..a.nrows()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
    let vals: Vec<f64> = idx[..d].iter().map(|&i| eig.eigenvalues[i]).collect();
    let x = DMatrix::from_fn(a.nrows(), d, |r, c| {
        eig.eigenvectors[(r, idx[c])] * vals[c].abs().sqrt()
    });
    (x, vals)
}

/// `V S^{1/2}` from the SVD of the explicit unfolding `(A1 | ... | AM)`.
pub fn dense_uase(nets: &[DMatrix<f64>], d: usize) -> DMatrix<f64> {
    let n = nets[0].nrows();
    let m = nets.len();
    let mut unfold = DMatrix::<f64>::zeros(n, n * m);
    for (k, a) in nets.iter().enumerate() {
        unfold.columns_mut(k * n, n).copy_from(a);
    }
    let svd = unfold.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    DMatrix::from_fn(n * m, d, |r, c| vt[(idx[c], r)] * svd.singular_values[idx[c]].sqrt())
}

/// kNN estimate by full sorting of every row, self placed first.
pub fn brute_knn_phat(a: &DMatrix<f64>, x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut raw = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((x.row(i) - x.row(j)).norm_squared(), j))
            .collect();
        others.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        let mut hood = vec![i];
        hood.extend(others.iter().take(k - 1).map(|p| p.1));
        for &j in &hood {
            for l in 0..n {
                raw[(i, l)] += a[(j, l)] / k as f64;
            }
        }
    }
    DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (raw[(i, j)] + raw[(j, i)]) / 2.0 })
}

/// `|| sum of first-half rows - sum of second-half rows ||`.
pub fn brute_displacement(y: &DMatrix<f64>) -> f64 {
    let n = y.nrows() / 2;
    let mut top = vec![0.0; y.ncols()];
    let mut bottom = vec![0.0; y.ncols()];
    for i in 0..n {
        for c in 0..y.ncols() {
            top[c] += y[(i, c)];
            bottom[c] += y[(i + n, c)];
        }
    }
    top.iter().zip(&bottom).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

pub fn brute_validity_score(p: &[f64]) -> f64 {
    let mut s = p.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, v)| (v - (i as f64 + 1.0) / (m + 1.0)).abs())
        .sum::<f64>()
        / m
}

/// Welford's streaming mean and covariance over the `samples` blocks of `y`.
pub fn streaming_covariance(y: &DMatrix<f64>, samples: usize, node: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = y.nrows() / samples;
    let d = y.ncols();
    let mut mean = vec![0.0; d];
    let mut m2 = DMatrix::<f64>::zeros(d, d);
    for s in 0..samples {
        let x: Vec<f64> = y.row(s * n + node).iter().copied().collect();
        let count = (s + 1) as f64;
        let delta: Vec<f64> = x.iter().zip(&mean).map(|(a, b)| a - b).collect();
        for c in 0..d {
            mean[c] += delta[c] / count;
        }
        for r in 0..d {
            for c in 0..d {
                m2[(r, c)] += delta[r] * (x[c] - mean[c]);
            }
        }
    }
    (mean, m2 / (samples - 1) as f64)
}

/// Variance of pair lengths via `E[L^2] - E[L]^2` over ordered pairs (each
/// unordered pair counted twice, which leaves the variance unchanged).
pub fn brute_fuzziness_score(pos: &DMatrix<f64>, overlap: &dyn Fn(usize, usize) -> bool) -> f64 {
    let n = pos.nrows();
    let (mut s1, mut s2, mut count) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i != j && overlap(i, j) {
                let l = ((pos[(i, 0)] - pos[(j, 0)]).powi(2) + (pos[(i, 1)] - pos[(j, 1)]).powi(2)).sqrt();
                s1 += l;
                s2 += l * l;
                count += 1.0;
            }
        }
    }
    s2 / count - (s1 / count).powi(2)
}
