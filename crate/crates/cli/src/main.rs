mod args;
mod commands;
mod config;
mod run;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::error;

use args::{BootstrapArgs, EmbedArgs, FuzzinessArgs, GenerateArgs, IngestArgs, KscanArgs, ValidateArgs};
use config::{resolve, ConfigFile};
use run::{Job, Manifest, Output, MANIFEST};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Bootstrap a single observed network and check the bootstrap's validity.
#[derive(Debug, Parser)]
#[command(name = "netboot", version)]
struct Cli {
    /// TOML file with top-level `seed`, `out_dir`, `workers` and a section per command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "NETBOOT_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "NETBOOT_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a network from a block model.
    Generate(GenerateArgs),
    /// Collapse a window of a contact list into a network.
    Ingest(IngestArgs),
    /// Spectral embedding of one or more networks.
    Embed(EmbedArgs),
    /// Write bootstrap replicates of a network.
    Bootstrap(BootstrapArgs),
    /// Score a bootstrap method with repeated exchangeability tests.
    Validate(ValidateArgs),
    /// Validity score of the kNN bootstrap over a range of k.
    Kscan(KscanArgs),
    /// Per-node uncertainty, overlap matrix and layout score.
    Fuzziness(FuzzinessArgs),
    /// Rerun the command recorded in a manifest and compare the outputs.
    Replay {
        /// Output directory of the earlier run, or its manifest.json.
        manifest: PathBuf,
    },
}

fn job_for(command: &Command, file: &ConfigFile) -> Result<Job> {
    let s = |name: &str| file.section(name);
    Ok(match command {
        Command::Generate(a) => Job::Generate(resolve(a, s("generate"), "generate")?),
        Command::Ingest(a) => Job::Ingest(resolve(a, s("ingest"), "ingest")?),
        Command::Embed(a) => Job::Embed(resolve(a, s("embed"), "embed")?),
        Command::Bootstrap(a) => Job::Bootstrap(resolve(a, s("bootstrap"), "bootstrap")?),
        Command::Validate(a) => Job::Validate(resolve(a, s("validate"), "validate")?),
        Command::Kscan(a) => Job::Kscan(resolve(a, s("kscan"), "kscan")?),
        Command::Fuzziness(a) => Job::Fuzziness(resolve(a, s("fuzziness"), "fuzziness")?),
        Command::Replay { .. } => unreachable!("replay has no config section"),
    })
}

/// Run a resolved job into `out_dir` and write its manifest.
fn execute(mut job: Job, seed: u64, out_dir: PathBuf) -> Result<Vec<String>> {
    job.normalize()?;
    let mut out = Output::new(out_dir, seed)?;
    match &job {
        Job::Generate(a) => commands::generate(a, &mut out)?,
        Job::Ingest(a) => commands::ingest(a, &mut out)?,
        Job::Embed(a) => commands::embed(a, &mut out)?,
        Job::Bootstrap(a) => commands::bootstrap(a, &mut out)?,
        Job::Validate(a) => commands::validate(a, &mut out)?,
        Job::Kscan(a) => commands::kscan(a, &mut out)?,
        Job::Fuzziness(a) => commands::fuzziness(a, &mut out)?,
    }
    out.finish(job)
}

fn replay(manifest_path: &PathBuf, out_dir: Option<PathBuf>) -> Result<bool> {
    let manifest = Manifest::read(manifest_path)?;
    let original = if manifest_path.is_dir() {
        manifest_path.clone()
    } else {
        manifest_path.parent().map(PathBuf::from).unwrap_or_default()
    };
    let target = out_dir.unwrap_or_else(|| original.join("replay"));
    if target == original {
        bail!("replay output directory must differ from the original run");
    }
    let files = execute(manifest.job.clone(), manifest.seed, target.clone())?;
    let mut names = manifest.files.clone();
    names.push(MANIFEST.to_string());
    let mut identical = true;
    for name in &names {
        let before = fs::read(original.join(name)).with_context(|| format!("reading original {name}"))?;
        let after = fs::read(target.join(name)).ok();
        if after.as_deref() != Some(&before[..]) {
            println!("differs: {name}");
            identical = false;
        }
    }
    for extra in files.iter().filter(|f| !names.contains(f)) {
        println!("new file: {extra}");
        identical = false;
    }
    if identical {
        println!("replay reproduced {} files in {}", names.len(), target.display());
    }
    Ok(identical)
}

fn main_inner(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let workers = cli.workers.or(file.workers);
    if let Some(w) = workers {
        if w == 0 {
            bail!("`workers` must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring worker threads")?;
    }
    let out_dir = cli.out_dir.clone().or(file.out_dir.clone());
    if let Command::Replay { manifest } = &cli.command {
        return replay(manifest, out_dir);
    }
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let job = job_for(&cli.command, &file)?;
    let out_dir = out_dir.unwrap_or_else(|| PathBuf::from("netboot-out"));
    execute(job, seed, out_dir.clone())?;
    println!("outputs in {}", out_dir.display());
    Ok(true)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .any(|e| e.downcast_ref::<netboot::Error>().is_some_and(netboot::Error::is_numerical));
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NUMERICAL),
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
