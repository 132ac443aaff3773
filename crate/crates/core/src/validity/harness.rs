//! Monte Carlo validation of a bootstrap method.
//!
//! Synthetic mode draws `M` networks from a known model and tests one
//! replicate of each against its source. Observed mode fixes a single
//! network and tests `M` of its replicates against it.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{exchangeability_test, ks_uniform_test, validity_score_with, Classification};
use crate::bootstrap::BootstrapMethod;
use crate::error::{Error, Result};
use crate::graph::{self, AdjacencyMatrix, MmsbmSpec, ProbabilityMatrix, SbmSpec};
use crate::rng::{derive_seed, tag};

#[derive(Debug, Clone)]
pub enum Model {
    Sbm(SbmSpec),
    Mmsbm(MmsbmSpec),
    /// Any fixed probability matrix.
    Probability(ProbabilityMatrix),
    /// A single observed network (no ground truth).
    Observed(AdjacencyMatrix),
}

impl Model {
    fn name(&self) -> &'static str {
        match self {
            Self::Sbm(_) => "sbm",
            Self::Mmsbm(_) => "mmsbm",
            Self::Probability(_) => "probability",
            Self::Observed(_) => "observed",
        }
    }

    fn n(&self) -> usize {
        match self {
            Self::Sbm(s) => s.n(),
            Self::Mmsbm(s) => s.n(),
            Self::Probability(p) => p.n(),
            Self::Observed(a) => a.n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    /// Number of tests (`M`).
    pub trials: usize,
    /// Permutations per test (`R`).
    pub permutations: usize,
    /// Dimension of the joint embedding used by the test.
    pub d: usize,
    pub seed: u64,
    pub valid_threshold: f64,
}

impl HarnessConfig {
    pub fn new(trials: usize, permutations: usize, d: usize, seed: u64) -> Self {
        Self {
            trials,
            permutations,
            d,
            seed,
            valid_threshold: super::DEFAULT_VALID_THRESHOLD,
        }
    }
}

/// Serialized summary of a harness run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub method: String,
    pub params: BTreeMap<String, Value>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub d: usize,
    pub p_values: Vec<f64>,
    pub score: f64,
    pub mean_deviation: f64,
    pub classification: Classification,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
}

impl HarnessReport {
    /// Full QQ view of the stored p-values.
    pub fn validity(&self, valid_threshold: f64) -> Result<super::ValidityReport> {
        validity_score_with(&self.p_values, valid_threshold)
    }
}

fn method_name(method: &BootstrapMethod) -> String {
    serde_json::to_value(method.tag())
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn params_of(model: &Model, method: &BootstrapMethod, cfg: &HarnessConfig) -> BTreeMap<String, Value> {
    let mut p = BTreeMap::new();
    p.insert("model".into(), json!(model.name()));
    p.insert("n".into(), json!(model.n()));
    p.insert("seed".into(), json!(cfg.seed));
    p.insert("valid_threshold".into(), json!(cfg.valid_threshold));
    match method {
        BootstrapMethod::AseKnn { k, d, scaling } => {
            p.insert("k".into(), json!(k));
            p.insert("embed_d".into(), json!(d));
            p.insert("scaling".into(), json!(scaling));
        }
        BootstrapMethod::ExternalKnn { k, positions } => {
            p.insert("k".into(), json!(k));
            p.insert("embed_d".into(), json!(positions.ncols()));
        }
        BootstrapMethod::Xxt { d } => {
            p.insert("embed_d".into(), json!(d));
        }
        _ => {}
    }
    p
}

fn synthetic_trial(
    truth: Option<&ProbabilityMatrix>,
    mmsbm: Option<&MmsbmSpec>,
    method: &BootstrapMethod,
    cfg: &HarnessConfig,
    trial: usize,
) -> Result<f64> {
    let trial_seed = derive_seed(cfg.seed, &[trial as u64]);
    let (a, p) = match mmsbm {
        Some(spec) => {
            let (a, p) = graph::sample_mmsbm(spec, derive_seed(trial_seed, &[tag::MODEL]));
            (a, Some(p))
        }
        None => {
            let p = truth.expect("fixed-probability model");
            (graph::sample_birg(p, derive_seed(trial_seed, &[tag::DRAW])), None)
        }
    };
    let truth = p.as_ref().or(truth);
    let mut batch = method.generate(&a, truth, 1, derive_seed(trial_seed, &[tag::BOOTSTRAP]))?;
    let a_tilde = batch.replicates.pop().expect("one replicate");
    Ok(exchangeability_test(&a, &a_tilde, cfg.d, cfg.permutations, trial_seed)?.p_value)
}

/// Run `M` exchangeability tests and summarize their p-values.
pub fn run_validation_harness(model: &Model, method: &BootstrapMethod, cfg: &HarnessConfig) -> Result<HarnessReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("the harness needs at least one trial"));
    }
    if cfg.permutations == 0 {
        return Err(Error::invalid("the harness needs at least one permutation"));
    }
    let p_values: Vec<f64> = match model {
        Model::Observed(a) => {
            let batch = method.generate(a, None, cfg.trials, derive_seed(cfg.seed, &[tag::BOOTSTRAP]))?;
            batch
                .replicates
                .par_iter()
                .enumerate()
                .map(|(m, rep)| {
                    let seed = derive_seed(cfg.seed, &[m as u64]);
                    exchangeability_test(a, rep, cfg.d, cfg.permutations, seed).map(|r| r.p_value)
                })
                .collect::<Result<_>>()?
        }
        Model::Mmsbm(spec) => (0..cfg.trials)
            .into_par_iter()
            .map(|m| synthetic_trial(None, Some(spec), method, cfg, m))
            .collect::<Result<_>>()?,
        Model::Sbm(_) | Model::Probability(_) => {
            let p = match model {
                Model::Sbm(spec) => graph::sbm_probability_matrix(spec),
                Model::Probability(p) => p.clone(),
                _ => unreachable!(),
            };
            (0..cfg.trials)
                .into_par_iter()
                .map(|m| synthetic_trial(Some(&p), None, method, cfg, m))
                .collect::<Result<_>>()?
        }
    };
    let validity = validity_score_with(&p_values, cfg.valid_threshold)?;
    let ks = ks_uniform_test(&p_values)?;
    Ok(HarnessReport {
        method: method_name(method),
        params: params_of(model, method, cfg),
        m: cfg.trials,
        r: cfg.permutations,
        d: cfg.d,
        p_values,
        score: validity.score,
        mean_deviation: validity.mean_deviation,
        classification: validity.classification,
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScanPoint {
    pub k: usize,
    pub score: f64,
    pub classification: Classification,
}

/// Validity score of ASE-kNN for each `k`, sharing random streams across `k`.
pub fn k_scan(
    model: &Model,
    ks: &[usize],
    embed_d: Option<usize>,
    scaling: Option<crate::embed::Scaling>,
    cfg: &HarnessConfig,
) -> Result<Vec<(KScanPoint, HarnessReport)>> {
    if ks.is_empty() {
        return Err(Error::invalid("k scan needs at least one k"));
    }
    ks.iter()
        .map(|&k| {
            let method = BootstrapMethod::AseKnn { k, d: embed_d, scaling };
            let report = run_validation_harness(model, &method, cfg)?;
            Ok((
                KScanPoint {
                    k,
                    score: report.score,
                    classification: report.classification,
                },
                report,
            ))
        })
        .collect()
}
