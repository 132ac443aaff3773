//! Per-command arguments. Each struct doubles as its config-file section.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 300-node, 3-community mixed-membership model with Dirichlet(1, 1, 1).
    #[value(name = "mmsbm-3")]
    #[serde(rename = "mmsbm-3")]
    Mmsbm3,
    /// 1000-node, 4-community block model with random assignment.
    #[value(name = "sbm-4")]
    #[serde(rename = "sbm-4")]
    Sbm4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Sbm,
    Mmsbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    /// Contiguous, equally sized communities.
    Balanced,
    /// Each node picks a community uniformly at random.
    Random,
}

/// Square matrix given as rows separated by `;` and entries by `,`, or as a
/// nested array in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "Vec<Vec<f64>>")]
pub struct BlockMatrix(pub Vec<Vec<f64>>);

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Rows(Vec<Vec<f64>>),
    Text(String),
}

impl TryFrom<MatrixRepr> for BlockMatrix {
    type Error = String;

    fn try_from(r: MatrixRepr) -> Result<Self, String> {
        match r {
            MatrixRepr::Rows(rows) => Ok(Self(rows)),
            MatrixRepr::Text(s) => s.parse(),
        }
    }
}

impl From<BlockMatrix> for Vec<Vec<f64>> {
    fn from(b: BlockMatrix) -> Self {
        b.0
    }
}

impl FromStr for BlockMatrix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let rows = s
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad matrix entry {:?}", x.trim())))
                    .collect::<Result<Vec<f64>, String>>()
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(Self(rows))
    }
}

/// A synthetic model: a preset, or an explicit block model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Number of nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Block matrix, e.g. `0.5,0.1;0.1,0.5`.
    #[arg(long)]
    pub block_matrix: Option<BlockMatrix>,
    /// Dirichlet concentrations (MMSBM).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Community assignment (SBM).
    #[arg(long, value_enum)]
    pub assignment: Option<Assignment>,
}

impl ModelArgs {
    pub fn is_set(&self) -> bool {
        self.preset.is_some() || self.model.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    AseKnn,
    ExternalKnn,
    Xxt,
    Eswr,
    EswrPlus,
    /// Fresh draws from the known model (synthetic validation only).
    TrueResample,
    /// The network itself, unchanged.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingArg {
    Sqrt,
    Full,
}

/// How replicates are produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct MethodArgs {
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Neighbourhood size for the kNN estimators.
    #[arg(long)]
    pub k: Option<usize>,
    /// Embedding dimension for ase-knn and xxt (elbow when absent for ase-knn).
    #[arg(long)]
    pub embed_d: Option<usize>,
    #[arg(long, value_enum)]
    pub scaling: Option<ScalingArg>,
    /// Node positions CSV for external-knn.
    #[arg(long)]
    pub positions: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct IngestArgs {
    /// Contact list, `t i j [class_i class_j]` per line.
    #[arg(long)]
    pub contacts: Option<PathBuf>,
    /// Participant list, `id [class]` per line.
    #[arg(long)]
    pub roster: Option<PathBuf>,
    /// Window start (inclusive), in the contact file's time unit.
    #[arg(long, allow_negative_numbers = true)]
    pub start: Option<i64>,
    /// Window end (exclusive).
    #[arg(long, allow_negative_numbers = true)]
    pub end: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedMethodArg {
    Ase,
    /// ASE weighted by the full eigenvalue magnitudes.
    AseFull,
    Uase,
    /// ASE of the dilated unfolding.
    Dilated,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct EmbedArgs {
    /// Adjacency file; repeat for uase and dilated.
    #[arg(long)]
    pub input: Option<Vec<PathBuf>>,
    #[arg(long, value_enum)]
    pub method: Option<EmbedMethodArg>,
    /// Embedding dimension; chosen by the scree elbow when absent.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub method: MethodArgs,
    /// Number of replicates.
    #[arg(long)]
    pub b: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct TestArgs {
    /// Number of tests (M).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Permutations per test (R).
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Dimension of the joint embedding used by the test.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub valid_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct ValidateArgs {
    /// Observed network; tests its replicates against it.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Known probability matrix (CSV); tests replicates of fresh draws.
    #[arg(long)]
    pub probability: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub test: TestArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct KscanArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub probability: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Explicit k values; otherwise `k-min..=k-max` in steps of `k-step`.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub k_step: Option<usize>,
    #[arg(long)]
    pub embed_d: Option<usize>,
    #[arg(long, value_enum)]
    pub scaling: Option<ScalingArg>,
    #[command(flatten)]
    #[serde(flatten)]
    pub test: TestArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
pub struct FuzzinessArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub method: MethodArgs,
    /// Number of replicates embedded with the observed network.
    #[arg(long)]
    pub b: Option<usize>,
    /// Joint embedding dimension.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub sd_threshold: Option<f64>,
    /// t-SNE perplexity for the overlay layout.
    #[arg(long)]
    pub perplexity: Option<f64>,
    /// Perplexities to scan; the best one is used for the overlay.
    #[arg(long, value_delimiter = ',')]
    pub perplexities: Option<Vec<f64>>,
    /// t-SNE iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// External layout CSV (`node,x,y`) instead of the internal t-SNE.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Node classes for colouring, `node<TAB>class` per line (as written by ingest).
    #[arg(long)]
    pub classes: Option<PathBuf>,
}
