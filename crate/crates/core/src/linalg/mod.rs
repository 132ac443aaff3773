//! Dense and iterative symmetric eigensolvers plus a few subspace utilities.

mod lanczos;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use lanczos::{lanczos_top_eigenpairs, LanczosConfig};

/// Largest operator size handled by the dense exact path under
/// [`Backend::Auto`].
pub const DENSE_THRESHOLD: usize = 512;

/// Which eigensolver to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Dense for operators of size up to [`DENSE_THRESHOLD`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

impl Backend {
    pub fn use_dense(self, n: usize) -> bool {
        match self {
            Backend::Auto => n <= DENSE_THRESHOLD,
            Backend::Dense => true,
            Backend::Lanczos => false,
        }
    }
}

/// A symmetric linear operator accessed through matrix-vector products.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Eigenpairs ordered by decreasing magnitude, vectors as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Order candidate eigenpairs by decreasing magnitude and keep `d`.
///
/// Candidates are first put in decreasing algebraic order so that magnitude
/// ties resolve deterministically (positive before negative, then by the
/// resulting position).
pub(crate) fn select_by_magnitude(values: &[f64], vectors: &DMatrix<f64>, d: usize) -> EigenPairs {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    if d < order.len() {
        let top = values[order[0]].abs().max(f64::MIN_POSITIVE);
        let gap = values[order[d - 1]].abs() - values[order[d]].abs();
        if gap <= 1e-10 * top {
            log::warn!(
                "eigenvalue magnitudes tie at the truncation boundary d={d} (|{}| vs |{}|)",
                values[order[d - 1]],
                values[order[d]]
            );
        }
    }
    let keep = &order[..d.min(order.len())];
    let mut out = DMatrix::zeros(vectors.nrows(), keep.len());
    for (c, &k) in keep.iter().enumerate() {
        out.set_column(c, &vectors.column(k));
    }
    fix_signs(&mut out);
    EigenPairs {
        values: keep.iter().map(|&k| values[k]).collect(),
        vectors: out,
    }
}

/// Orient each column so its largest-magnitude entry is positive; among equal
/// magnitudes the lowest index decides.
pub fn fix_signs(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for r in 0..m.nrows() {
            let v = m[(r, c)].abs();
            if v > best_abs {
                best_abs = v;
                best = r;
            }
        }
        if m.nrows() > 0 && m[(best, c)] < 0.0 {
            m.column_mut(c).neg_mut();
        }
    }
}

/// Top-`d` eigenpairs of a dense symmetric matrix by full decomposition.
pub fn dense_top_eigenpairs(m: &DMatrix<f64>, d: usize) -> EigenPairs {
    let eig = SymmetricEigen::new(m.clone());
    select_by_magnitude(eig.eigenvalues.as_slice(), &eig.eigenvectors, d)
}

/// Orthonormal basis for the column space of `x` (thin QR).
fn orthonormal_basis(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().qr().q()
}

/// Sine of the largest principal angle between the column spaces of `a` and
/// `b` (both full column rank, same number of rows).
pub fn max_principal_angle_sin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = orthonormal_basis(a);
    let qb = orthonormal_basis(b);
    let resid = &qb - &qa * (qa.transpose() * &qb);
    let s = resid.singular_values();
    s.iter().cloned().fold(0.0, f64::max)
}

/// Frobenius residual `min_Q ||a Q - b||` over orthogonal `Q`, with `a` and
/// `b` of identical shape.
pub fn procrustes_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let m = a.transpose() * b;
    let svd = m.svd(true, true);
    let q = svd.u.expect("u requested") * svd.v_t.expect("v requested");
    (a * q - b).norm()
}
