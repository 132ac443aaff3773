//! Output directory handling and the top-level manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::args::{BootstrapArgs, EmbedArgs, FuzzinessArgs, GenerateArgs, IngestArgs, KscanArgs, ValidateArgs};

pub const MANIFEST: &str = "manifest.json";

/// A fully resolved command, as stored in `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum Job {
    Generate(GenerateArgs),
    Ingest(IngestArgs),
    Embed(EmbedArgs),
    Bootstrap(BootstrapArgs),
    Validate(ValidateArgs),
    Kscan(KscanArgs),
    Fuzziness(FuzzinessArgs),
}

fn absolute(p: &mut Option<PathBuf>) -> Result<()> {
    if let Some(path) = p {
        *path = fs::canonicalize(&*path).with_context(|| format!("input file {} not found", path.display()))?;
    }
    Ok(())
}

impl Job {
    /// Make every input path absolute so a manifest can be replayed from
    /// any working directory. Fails on missing files.
    pub fn normalize(&mut self) -> Result<()> {
        match self {
            Job::Generate(_) => Ok(()),
            Job::Ingest(a) => {
                absolute(&mut a.contacts)?;
                absolute(&mut a.roster)
            }
            Job::Embed(a) => {
                for p in a.input.iter_mut().flatten() {
                    let mut o = Some(p.clone());
                    absolute(&mut o)?;
                    *p = o.unwrap_or_default();
                }
                Ok(())
            }
            Job::Bootstrap(a) => {
                absolute(&mut a.input)?;
                absolute(&mut a.method.positions)
            }
            Job::Validate(a) => {
                absolute(&mut a.input)?;
                absolute(&mut a.probability)?;
                absolute(&mut a.method.positions)
            }
            Job::Kscan(a) => {
                absolute(&mut a.input)?;
                absolute(&mut a.probability)
            }
            Job::Fuzziness(a) => {
                absolute(&mut a.input)?;
                absolute(&mut a.method.positions)?;
                absolute(&mut a.layout)?;
                absolute(&mut a.classes)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    #[serde(flatten)]
    pub job: Job,
    /// Files written by the run, relative to the output directory.
    pub files: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let path = if path.is_dir() { path.join(MANIFEST) } else { path.to_path_buf() };
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Collects the files a command writes; every write is atomic.
pub struct Output {
    pub dir: PathBuf,
    pub seed: u64,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: PathBuf, seed: u64) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            seed,
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        netboot::write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Record files written by other means (already atomic).
    pub fn record(&mut self, names: impl IntoIterator<Item = String>) {
        self.files.extend(names);
    }

    pub fn finish(mut self, job: Job) -> Result<Vec<String>> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            job,
            files: self.files.clone(),
        };
        self.write_json(MANIFEST, &manifest)?;
        Ok(self.files)
    }
}
