//! One-sample Kolmogorov-Smirnov test against U[0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `sup_x |F_M(x) - x|` for the empirical CDF of `samples`.
pub fn ks_uniform_statistic(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("KS statistic needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / m - x).max(x - i as f64 / m)
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // the alternating series converges slowly here and the value is 1 to
        // double precision anyway
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS statistic with the asymptotic p-value, using Stephens' finite-sample
/// correction `lambda = (sqrt(M) + 0.12 + 0.11 / sqrt(M)) D`.
pub fn ks_uniform_test(samples: &[f64]) -> Result<KsResult> {
    let statistic = ks_uniform_statistic(samples)?;
    let sm = (samples.len() as f64).sqrt();
    let lambda = (sm + 0.12 + 0.11 / sm) * statistic;
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_survival(lambda),
    })
}
