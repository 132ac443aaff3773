//! Lanczos iteration with full reorthogonalization.
//!
//! The Krylov space grows one vector at a time until every wanted Ritz pair
//! has a residual below `tol * |theta_max|`, or the space fills the whole
//! domain (at which point the result is exact). On breakdown the iteration
//! continues from a fresh vector orthogonal to the current basis. The start
//! vector comes from a fixed internal seed, so results are reproducible.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;

use super::{select_by_magnitude, EigenPairs, SymmetricOperator};
use crate::error::{Error, Result};
use crate::rng;

const START_SEED: u64 = 0x1a2c_3e4f_5061_7283;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Convergence is tested every `check_every` steps.
    pub check_every: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1000,
            check_every: 4,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }
}

struct Ritz {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    worst_residual: f64,
}

fn ritz(alpha: &[f64], beta: &[f64], last_beta: f64, d: usize, tol: f64) -> (Ritz, bool) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let sel = select_by_magnitude(eig.eigenvalues.as_slice(), &eig.eigenvectors, d);
    let scale = sel.values.first().map_or(0.0, |v| v.abs()).max(f64::MIN_POSITIVE);
    let worst = (0..sel.values.len())
        .map(|c| (last_beta * sel.vectors[(m - 1, c)]).abs())
        .fold(0.0, f64::max);
    let converged = worst <= tol * scale;
    (
        Ritz {
            values: sel.values,
            vectors: sel.vectors,
            worst_residual: worst / scale,
        },
        converged,
    )
}

/// Top-`d` eigenpairs of `op` by magnitude.
pub fn lanczos_top_eigenpairs<O: SymmetricOperator + ?Sized>(
    op: &O,
    d: usize,
    config: &LanczosConfig,
) -> Result<EigenPairs> {
    let n = op.dim();
    if d == 0 || d > n {
        return Err(Error::invalid(format!("cannot extract {d} eigenpairs from a {n}-dimensional operator")));
    }
    let max_dim = n.min(config.max_iter.max(d));
    let min_dim = n.min((2 * d + 10).max(20));
    let mut start_rng = rng::rng_from_seed(START_SEED);
    let mut fresh = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n).map(|_| start_rng.random::<f64>() - 0.5).collect();
            orthogonalize(&mut v, basis);
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim);
    let mut alpha: Vec<f64> = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
    let mut q = fresh(&basis).expect("nonzero start vector");
    let mut w = vec![0.0; n];
    let mut scale = 0.0f64;
    let mut last = None;

    loop {
        op.apply(&q, &mut w);
        let a = dot(&q, &w);
        basis.push(q);
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        scale = scale.max(a.abs()).max(b);
        let m = basis.len();
        let breakdown = b <= 1e-12 * scale.max(f64::MIN_POSITIVE);
        let residual_beta = if breakdown { 0.0 } else { b };

        let full = m == n;
        let should_check = full || (m >= min_dim && (m % config.check_every == 0 || breakdown || m == max_dim));
        if should_check {
            let (r, converged) = ritz(&alpha, &beta, residual_beta, d, config.tol);
            if converged || full {
                let vectors = {
                    let mut qm = DMatrix::zeros(n, m);
                    for (c, v) in basis.iter().enumerate() {
                        qm.set_column(c, &nalgebra::DVector::from_column_slice(v));
                    }
                    let mut v = qm * &r.vectors;
                    super::fix_signs(&mut v);
                    v
                };
                return Ok(EigenPairs {
                    values: r.values,
                    vectors,
                });
            }
            last = Some(r.worst_residual);
        }
        if m == max_dim {
            return Err(Error::NonConvergence {
                iterations: m,
                residual: last.unwrap_or(f64::INFINITY),
            });
        }
        if breakdown {
            match fresh(&basis) {
                Some(v) => {
                    q = v;
                    beta.push(0.0);
                }
                None => {
                    return Err(Error::NonConvergence {
                        iterations: m,
                        residual: last.unwrap_or(f64::INFINITY),
                    })
                }
            }
        } else {
            q = w.iter().map(|x| x / b).collect();
            beta.push(b);
        }
    }
}
