//! Bootstrap exchangeability test and the validity score built on it.
//!
//! The observed network and one bootstrap replicate are embedded jointly
//! with UASE. Under a valid bootstrap, node `i`'s two positions are
//! exchangeable, so randomly swapping them should not change the size of the
//! summed displacement between blocks. The resulting permutation p-values
//! are uniform; [`validity_score`] measures how far a collection of them is
//! from uniform.

mod harness;
mod ks;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::embed::{self, Embedding};
use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::rng::{self, tag};

pub use harness::{
    k_scan, run_validation_harness, HarnessConfig, HarnessReport, KScanPoint, Model,
};
pub use crate::bootstrap::BootstrapMethod;
pub use ks::{kolmogorov_survival, ks_uniform_statistic, ks_uniform_test, KsResult};

pub const DEFAULT_VALID_THRESHOLD: f64 = 0.1;
pub const DEFAULT_PERMUTATIONS: usize = 1000;
pub const DEFAULT_HARNESS_PERMUTATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeabilityResult {
    pub p_value: f64,
    pub t_obs: f64,
    /// Statistics of the `R` random swaps, in generation order.
    pub permuted_stats: Vec<f64>,
    #[serde(rename = "R")]
    pub r: usize,
    pub d: usize,
}

fn check_two_blocks(y: &Embedding) -> Result<()> {
    if y.blocks() != 2 {
        return Err(Error::invalid(format!(
            "displacement statistic needs 2 blocks, got {}",
            y.blocks()
        )));
    }
    Ok(())
}

/// Row-wise differences `Y_i - Y_{i+n}` between the two blocks.
pub fn block_differences(y: &Embedding) -> Result<DMatrix<f64>> {
    check_two_blocks(y)?;
    Ok(y.block(0) - y.block(1))
}

/// `|| sum_i s_i D_i ||_2` for signs `s_i` (`true` means swapped).
pub fn signed_displacement(diffs: &DMatrix<f64>, swapped: &[bool]) -> f64 {
    let mut acc = DVector::<f64>::zeros(diffs.ncols());
    for (i, &s) in swapped.iter().enumerate() {
        if s {
            acc -= diffs.row(i).transpose();
        } else {
            acc += diffs.row(i).transpose();
        }
    }
    acc.norm()
}

/// Norm of the difference between the two blocks' row sums.
pub fn displacement_statistic(y: &Embedding) -> Result<f64> {
    let diffs = block_differences(y)?;
    Ok(signed_displacement(&diffs, &vec![false; diffs.nrows()]))
}

/// Share of statistics (the observed one included) at least as large as `t_obs`.
pub fn permutation_p_value(t_obs: f64, permuted: &[f64]) -> f64 {
    let hits = 1 + permuted.iter().filter(|&&t| t >= t_obs).count();
    hits as f64 / (permuted.len() + 1) as f64
}

/// Permutation test on an existing two-block joint embedding.
pub fn exchangeability_test_embedded(y: &Embedding, r: usize, seed: u64) -> Result<ExchangeabilityResult> {
    if r == 0 {
        return Err(Error::invalid("need at least one permutation"));
    }
    let diffs = block_differences(y)?;
    let n = diffs.nrows();
    let t_obs = signed_displacement(&diffs, &vec![false; n]);
    let mut rng = rng::derived_rng(seed, &[tag::PERMUTATION]);
    let mut swapped = vec![false; n];
    let permuted_stats: Vec<f64> = (0..r)
        .map(|_| {
            for s in swapped.iter_mut() {
                *s = rng.random::<bool>();
            }
            signed_displacement(&diffs, &swapped)
        })
        .collect();
    Ok(ExchangeabilityResult {
        p_value: permutation_p_value(t_obs, &permuted_stats),
        t_obs,
        permuted_stats,
        r,
        d: y.d(),
    })
}

/// Joint UASE of `(a, a_tilde)` at dimension `d`, then the permutation test.
pub fn exchangeability_test(
    a: &AdjacencyMatrix,
    a_tilde: &AdjacencyMatrix,
    d: usize,
    r: usize,
    seed: u64,
) -> Result<ExchangeabilityResult> {
    let (y, _) = embed::uase(&[a, a_tilde], d)?;
    exchangeability_test_embedded(&y, r, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Valid,
    /// p-values concentrate near zero: replicates look too different.
    Invalid,
    /// p-values concentrate near one: replicates look too similar.
    Conservative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub p_values: Vec<f64>,
    pub sorted_p: Vec<f64>,
    /// `(m / (M + 1), sorted_p[m - 1])` for `m = 1..=M`.
    pub qq_pairs: Vec<(f64, f64)>,
    pub score: f64,
    /// Mean of `sorted_p - quantile`; its sign separates invalid from
    /// conservative behaviour.
    pub mean_deviation: f64,
    pub classification: Classification,
}

pub fn classify(score: f64, mean_deviation: f64, valid_threshold: f64) -> Classification {
    if score <= valid_threshold {
        Classification::Valid
    } else if mean_deviation > 0.0 {
        Classification::Conservative
    } else {
        Classification::Invalid
    }
}

pub fn validity_score(p_values: &[f64]) -> Result<ValidityReport> {
    validity_score_with(p_values, DEFAULT_VALID_THRESHOLD)
}

pub fn validity_score_with(p_values: &[f64], valid_threshold: f64) -> Result<ValidityReport> {
    if p_values.is_empty() {
        return Err(Error::invalid("validity score needs at least one p-value"));
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("p-value {p} outside [0, 1]")));
    }
    let m = p_values.len();
    let mut sorted_p = p_values.to_vec();
    sorted_p.sort_by(f64::total_cmp);
    let qq_pairs: Vec<(f64, f64)> = sorted_p
        .iter()
        .enumerate()
        .map(|(i, &p)| ((i + 1) as f64 / (m + 1) as f64, p))
        .collect();
    let score = qq_pairs.iter().map(|(q, p)| (p - q).abs()).sum::<f64>() / m as f64;
    let mean_deviation = qq_pairs.iter().map(|(q, p)| p - q).sum::<f64>() / m as f64;
    Ok(ValidityReport {
        p_values: p_values.to_vec(),
        sorted_p,
        qq_pairs,
        score,
        mean_deviation,
        classification: classify(score, mean_deviation, valid_threshold),
    })
}

/// `quantile,p_value` rows of a QQ plot.
pub fn write_qq_csv<W: std::io::Write>(report: &ValidityReport, mut w: W) -> Result<()> {
    writeln!(w, "quantile,p_value")?;
    for (q, p) in &report.qq_pairs {
        writeln!(w, "{q},{p}")?;
    }
    Ok(())
}
