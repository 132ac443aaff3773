//! One function per subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use nalgebra::DMatrix;
use serde_json::json;

use netboot::bootstrap::{export_batch, BootstrapMethod};
use netboot::embed::{self, load_external_embedding, select_dimension_elbow, write_embedding_csv, AseEmbedder, Scaling};
use netboot::graph::io::{
    contacts_to_window, read_adjacency, read_contacts, read_probability_csv, read_roster, write_edge_list,
    write_matrix_csv, write_matrix_market,
};
use netboot::graph::{sample_birg, sample_mmsbm, sbm_probability_matrix, MmsbmSpec, SbmSpec};
use netboot::rng::{derive_seed, tag};
use netboot::uncertainty::{
    fuzziness_matrix, fuzziness_score, node_uncertainty, perplexity_scan, read_layout_csv, tsne_layout_with,
    write_layout_csv, write_node_uncertainty_json, Layout2D, TsneConfig, DEFAULT_SD_THRESHOLD,
};
use netboot::validity::{
    k_scan, run_validation_harness, write_qq_csv, HarnessConfig, Model, DEFAULT_HARNESS_PERMUTATIONS,
    DEFAULT_VALID_THRESHOLD,
};
use netboot::AdjacencyMatrix;

use crate::args::{
    Assignment, BlockMatrix, BootstrapArgs, EmbedArgs, EmbedMethodArg, FuzzinessArgs, GenerateArgs, IngestArgs,
    KscanArgs, MethodArg, MethodArgs, ModelArgs, ModelKind, Preset, ScalingArg, TestArgs, ValidateArgs,
};
use crate::run::Output;
use crate::svg;

const DEFAULT_K: usize = 5;
const DEFAULT_B: usize = 100;
const DEFAULT_TRIALS: usize = 100;
const DEFAULT_PERPLEXITY: f64 = 30.0;
const SPECTRUM_LEN: usize = 30;

fn mmsbm_preset_matrix() -> Vec<Vec<f64>> {
    vec![vec![0.3, 0.2, 0.2], vec![0.2, 0.6, 0.2], vec![0.2, 0.2, 0.9]]
}

fn sbm_preset_matrix() -> Vec<Vec<f64>> {
    vec![
        vec![0.7, 0.4, 0.2, 0.5],
        vec![0.4, 0.6, 0.3, 0.2],
        vec![0.2, 0.3, 0.8, 0.4],
        vec![0.5, 0.2, 0.4, 0.9],
    ]
}

fn to_matrix(b: &BlockMatrix) -> Result<DMatrix<f64>> {
    let c = b.0.len();
    if c == 0 || b.0.iter().any(|r| r.len() != c) {
        bail!("block matrix must be square and nonempty");
    }
    Ok(DMatrix::from_fn(c, c, |i, j| b.0[i][j]))
}

/// A synthetic model after presets and overrides are applied.
enum Synthetic {
    Sbm(SbmSpec),
    Mmsbm(MmsbmSpec),
}

impl Synthetic {
    fn into_model(self) -> Model {
        match self {
            Synthetic::Sbm(s) => Model::Sbm(s),
            Synthetic::Mmsbm(s) => Model::Mmsbm(s),
        }
    }
}

fn synthetic(m: &ModelArgs, seed: u64) -> Result<Synthetic> {
    let (mut kind, mut n, mut b, mut alpha, mut assignment) = match m.preset {
        Some(Preset::Mmsbm3) => (
            Some(ModelKind::Mmsbm),
            Some(300),
            Some(mmsbm_preset_matrix()),
            Some(vec![1.0; 3]),
            None,
        ),
        Some(Preset::Sbm4) => (
            Some(ModelKind::Sbm),
            Some(1000),
            Some(sbm_preset_matrix()),
            None,
            Some(Assignment::Random),
        ),
        None => (None, None, None, None, None),
    };
    kind = m.model.or(kind);
    n = m.n.or(n);
    b = m.block_matrix.as_ref().map(|x| x.0.clone()).or(b);
    alpha = m.alpha.clone().or(alpha);
    assignment = m.assignment.or(assignment);
    let kind = kind.ok_or_else(|| anyhow!("no model given: set `preset` or `model`"))?;
    let n = n.ok_or_else(|| anyhow!("model needs `n`"))?;
    let b = to_matrix(&BlockMatrix(b.ok_or_else(|| anyhow!("model needs `block_matrix`"))?))?;
    let c = b.nrows();
    Ok(match kind {
        ModelKind::Sbm => {
            if alpha.is_some() {
                warn!("`alpha` is ignored for an SBM");
            }
            let spec = match assignment.unwrap_or(Assignment::Balanced) {
                Assignment::Balanced => SbmSpec::new(b, (0..n).map(|i| i * c / n.max(1)).collect())?,
                Assignment::Random => SbmSpec::with_random_assignment(b, n, derive_seed(seed, &[tag::MODEL]))?,
            };
            Synthetic::Sbm(spec)
        }
        ModelKind::Mmsbm => {
            if assignment.is_some() {
                warn!("`assignment` is ignored for an MMSBM");
            }
            Synthetic::Mmsbm(MmsbmSpec::new(n, alpha.unwrap_or_else(|| vec![1.0; c]), b)?)
        }
    })
}

fn load_network(path: &Option<std::path::PathBuf>) -> Result<AdjacencyMatrix> {
    let path = path.as_ref().ok_or_else(|| anyhow!("an `input` network is required"))?;
    Ok(read_adjacency(path).with_context(|| format!("loading {}", path.display()))?)
}

fn scaling_of(s: Option<ScalingArg>) -> Option<Scaling> {
    s.map(|s| match s {
        ScalingArg::Sqrt => Scaling::SqrtSigma,
        ScalingArg::Full => Scaling::FullSigma,
    })
}

/// Resolve the replicate generator. `n` is needed to load external positions.
fn bootstrap_method(m: &MethodArgs, n: usize) -> Result<BootstrapMethod> {
    let method = m.method.unwrap_or(MethodArg::AseKnn);
    let uses_k = matches!(method, MethodArg::AseKnn | MethodArg::ExternalKnn);
    let uses_d = matches!(method, MethodArg::AseKnn | MethodArg::Xxt);
    if !uses_k && m.k.is_some() {
        warn!("`k` is ignored by the {method:?} method");
    }
    if !uses_d && m.embed_d.is_some() {
        warn!("`embed_d` is ignored by the {method:?} method");
    }
    if method != MethodArg::AseKnn && m.scaling.is_some() {
        warn!("`scaling` is ignored by the {method:?} method");
    }
    if method != MethodArg::ExternalKnn && m.positions.is_some() {
        warn!("`positions` is ignored by the {method:?} method");
    }
    let k = m.k.unwrap_or(DEFAULT_K);
    Ok(match method {
        MethodArg::AseKnn => BootstrapMethod::AseKnn {
            k,
            d: m.embed_d,
            scaling: scaling_of(m.scaling),
        },
        MethodArg::ExternalKnn => {
            let path = m
                .positions
                .as_ref()
                .ok_or_else(|| anyhow!("external-knn needs `positions`"))?;
            let emb = load_external_embedding(path, n)?;
            BootstrapMethod::ExternalKnn {
                k,
                positions: emb.into_positions(),
            }
        }
        MethodArg::Xxt => BootstrapMethod::Xxt {
            d: m.embed_d.ok_or_else(|| anyhow!("xxt needs `embed_d`"))?,
        },
        MethodArg::Eswr => BootstrapMethod::Eswr,
        MethodArg::EswrPlus => BootstrapMethod::EswrPlus,
        MethodArg::TrueResample => BootstrapMethod::TrueResample,
        MethodArg::Identity => BootstrapMethod::Identity,
    })
}

fn network_files(out: &mut Output, a: &AdjacencyMatrix) -> Result<()> {
    let mut mtx = Vec::new();
    write_matrix_market(a, &mut mtx)?;
    out.write("adjacency.mtx", &mtx)?;
    let mut edges = Vec::new();
    write_edge_list(a, &mut edges)?;
    out.write("edges.tsv", &edges)
}

pub fn generate(args: &GenerateArgs, out: &mut Output) -> Result<()> {
    let seed = out.seed;
    let (a, p, communities) = match synthetic(&args.model, seed)? {
        Synthetic::Sbm(spec) => {
            let p = sbm_probability_matrix(&spec);
            let a = sample_birg(&p, derive_seed(seed, &[tag::DRAW]));
            (a, p, Some(spec.assignment().to_vec()))
        }
        Synthetic::Mmsbm(spec) => {
            let (a, p) = sample_mmsbm(&spec, derive_seed(seed, &[tag::DRAW]));
            (a, p, None)
        }
    };
    network_files(out, &a)?;
    let mut pbuf = Vec::new();
    write_matrix_csv(p.as_matrix(), &mut pbuf)?;
    out.write("probability.csv", &pbuf)?;
    if let Some(c) = communities {
        let text: String = c.iter().enumerate().map(|(i, c)| format!("{i}\t{c}\n")).collect();
        out.write("communities.tsv", format!("node\tcommunity\n{text}").as_bytes())?;
    }
    info!("generated {} nodes, {} edges", a.n(), a.edge_count());
    Ok(())
}

pub fn ingest(args: &IngestArgs, out: &mut Output) -> Result<()> {
    let path = args.contacts.as_ref().ok_or_else(|| anyhow!("ingest needs `contacts`"))?;
    let (start, end) = match (args.start, args.end) {
        (Some(s), Some(e)) => (s, e),
        _ => bail!("ingest needs both `start` and `end`"),
    };
    let contacts = read_contacts(path)?;
    let roster = args.roster.as_deref().map(read_roster).transpose()?;
    let window = contacts_to_window(&contacts, start, end, roster.as_deref())?;
    let a = &window.adjacency;
    network_files(out, a)?;
    let labels = a.node_labels().unwrap_or_default();
    let mut nodes = String::from("node\tid\tclass\n");
    for i in 0..a.n() {
        let id = labels.get(i).map_or_else(|| i.to_string(), Clone::clone);
        let class = window.classes[i].as_deref().unwrap_or("");
        nodes.push_str(&format!("{i}\t{id}\t{class}\n"));
    }
    out.write("nodes.tsv", nodes.as_bytes())?;
    info!("window [{start}, {end}): {} nodes, {} edges", a.n(), a.edge_count());
    Ok(())
}

fn embedding_csv(out: &mut Output, name: &str, m: &DMatrix<f64>, labels: Option<&[String]>) -> Result<()> {
    let mut buf = Vec::new();
    write_embedding_csv(m, labels, &mut buf)?;
    out.write(name, &buf)
}

pub fn embed(args: &EmbedArgs, out: &mut Output) -> Result<()> {
    let paths = args.input.as_deref().unwrap_or_default();
    if paths.is_empty() {
        bail!("embed needs at least one `input`");
    }
    let nets = paths
        .iter()
        .map(|p| read_adjacency(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let method = args.method.unwrap_or(if nets.len() > 1 {
        EmbedMethodArg::Uase
    } else {
        EmbedMethodArg::Ase
    });
    if matches!(method, EmbedMethodArg::Ase | EmbedMethodArg::AseFull) && nets.len() > 1 {
        bail!("{method:?} embeds a single network; use uase or dilated for several");
    }
    let n = nets[0].n();
    let labels = nets[0].node_labels();
    let count = SPECTRUM_LEN.min(n);
    let (d, elbow) = match args.d {
        Some(d) => (d, false),
        None => {
            let spectrum = match method {
                EmbedMethodArg::Uase | EmbedMethodArg::Dilated => embed::uase(&nets, count)?.1,
                _ => embed::spectrum(&nets[0], count)?,
            };
            let d = select_dimension_elbow(&spectrum)?;
            info!("elbow selected d = {d}");
            (d, true)
        }
    };
    let values = match method {
        EmbedMethodArg::Ase | EmbedMethodArg::AseFull => {
            let scaling = if method == EmbedMethodArg::Ase {
                Scaling::SqrtSigma
            } else {
                Scaling::FullSigma
            };
            let (x, s) = embed::ase_with(&nets[0], d, scaling, &embed::EmbedOptions::default())?;
            embedding_csv(out, "embedding.csv", x.positions(), labels)?;
            s.values
        }
        EmbedMethodArg::Uase => {
            let (y, s) = embed::uase(&nets, d)?;
            for m in 0..y.blocks() {
                embedding_csv(out, &format!("embedding_{m}.csv"), &y.block(m).into_owned(), labels)?;
            }
            s.values
        }
        EmbedMethodArg::Dilated => {
            let y = embed::dilated_unfolded_embed(&nets, d, &AseEmbedder::default())?;
            for m in 0..y.blocks() {
                embedding_csv(out, &format!("embedding_{m}.csv"), &y.block(m).into_owned(), labels)?;
            }
            Vec::new()
        }
    };
    out.write_json(
        "spectrum.json",
        &json!({ "method": method, "d": d, "elbow": elbow, "values": values }),
    )
}

pub fn bootstrap(args: &BootstrapArgs, out: &mut Output) -> Result<()> {
    let a = load_network(&args.input)?;
    let method = bootstrap_method(&args.method, a.n())?;
    if method == BootstrapMethod::TrueResample {
        bail!("true-resample needs a known model; use `validate`");
    }
    let b = args.b.unwrap_or(DEFAULT_B);
    if b == 0 {
        bail!("`b` must be at least 1");
    }
    let batch = method.generate(&a, None, b, out.seed)?;
    let manifest = export_batch(&batch, &out.dir.join("replicates"), method.k(), method.d())?;
    out.record(manifest.files.iter().map(|f| format!("replicates/{f}")));
    out.record(["replicates/manifest.json".to_string()]);
    info!("wrote {b} replicates");
    Ok(())
}

/// The model under test: an observed network, a known P, or a generator.
fn test_model(input: &Option<std::path::PathBuf>, probability: &Option<std::path::PathBuf>, m: &ModelArgs, seed: u64) -> Result<Model> {
    let given = [input.is_some(), probability.is_some(), m.is_set()];
    if given.iter().filter(|&&g| g).count() != 1 {
        bail!("give exactly one of `input`, `probability`, or a model (`preset`/`model`)");
    }
    if input.is_some() {
        return Ok(Model::Observed(load_network(input)?));
    }
    if let Some(p) = probability {
        return Ok(Model::Probability(read_probability_csv(p)?));
    }
    Ok(synthetic(m, seed)?.into_model())
}

fn harness_config(t: &TestArgs, fallback_d: Option<usize>, seed: u64) -> Result<HarnessConfig> {
    let d = t
        .d
        .or(fallback_d)
        .ok_or_else(|| anyhow!("the test dimension `d` is required"))?;
    let mut cfg = HarnessConfig::new(
        t.trials.unwrap_or(DEFAULT_TRIALS),
        t.permutations.unwrap_or(DEFAULT_HARNESS_PERMUTATIONS),
        d,
        seed,
    );
    cfg.valid_threshold = t.valid_threshold.unwrap_or(DEFAULT_VALID_THRESHOLD);
    if cfg.trials == 0 {
        bail!("`trials` (M) must be at least 1");
    }
    Ok(cfg)
}

fn model_n(model: &Model) -> usize {
    match model {
        Model::Sbm(s) => s.n(),
        Model::Mmsbm(s) => s.n(),
        Model::Probability(p) => p.n(),
        Model::Observed(a) => a.n(),
    }
}

pub fn validate(args: &ValidateArgs, out: &mut Output) -> Result<()> {
    let model = test_model(&args.input, &args.probability, &args.model, out.seed)?;
    let method = bootstrap_method(&args.method, model_n(&model))?;
    if matches!(method, BootstrapMethod::ExternalKnn { .. }) && !matches!(model, Model::Observed(_)) {
        bail!("external-knn positions describe one network; use it with `input`");
    }
    let cfg = harness_config(&args.test, args.method.embed_d, out.seed)?;
    let report = run_validation_harness(&model, &method, &cfg)?;
    let validity = report.validity(cfg.valid_threshold)?;
    out.write_json("report.json", &report)?;
    let mut qq = Vec::new();
    write_qq_csv(&validity, &mut qq)?;
    out.write("qq.csv", &qq)?;
    let title = format!("{} (S = {:.3}, {:?})", report.method, report.score, report.classification);
    out.write("qq.svg", svg::qq_plot(&title, &validity.qq_pairs).as_bytes())?;
    println!(
        "{}: S = {:.4}, {:?} (M = {}, R = {}, d = {})",
        report.method, report.score, report.classification, report.m, report.r, report.d
    );
    Ok(())
}

fn k_values(args: &KscanArgs, n: usize) -> Result<Vec<usize>> {
    if let Some(ks) = &args.ks {
        if ks.is_empty() {
            bail!("`ks` is empty");
        }
        return Ok(ks.clone());
    }
    let lo = args.k_min.unwrap_or(2);
    let hi = args.k_max.unwrap_or(n / 2);
    if lo < 2 || hi < lo {
        bail!("k range {lo}..={hi} is empty or starts below 2");
    }
    let step = args.k_step.unwrap_or(((hi - lo) / 12).max(1));
    let mut ks: Vec<usize> = (lo..=hi).step_by(step.max(1)).collect();
    if ks.last() != Some(&hi) {
        ks.push(hi);
    }
    Ok(ks)
}

pub fn kscan(args: &KscanArgs, out: &mut Output) -> Result<()> {
    let model = test_model(&args.input, &args.probability, &args.model, out.seed)?;
    let ks = k_values(args, model_n(&model))?;
    let cfg = harness_config(&args.test, args.embed_d, out.seed)?;
    let scan = k_scan(&model, &ks, args.embed_d, scaling_of(args.scaling), &cfg)?;
    let mut csv = String::from("k,score,classification\n");
    for (p, _) in &scan {
        csv.push_str(&format!("{},{},{}\n", p.k, p.score, serde_json::to_value(p.classification)?.as_str().unwrap_or("")));
    }
    out.write("kscan.csv", csv.as_bytes())?;
    let reports: BTreeMap<String, _> = scan.iter().map(|(p, r)| (format!("k={:06}", p.k), r)).collect();
    out.write_json("kscan.json", &reports)?;
    let pts: Vec<(f64, f64)> = scan.iter().map(|(p, _)| (p.k as f64, p.score)).collect();
    out.write(
        "kscan.svg",
        svg::curve_plot("validity score against k", "k", "bootstrap validity score", &pts, Some(cfg.valid_threshold))
            .as_bytes(),
    )?;
    for (p, _) in &scan {
        println!("k = {:>4}: S = {:.4} {:?}", p.k, p.score, p.classification);
    }
    Ok(())
}

/// Class index per node from a `node<TAB>[id<TAB>]class` file.
fn read_classes(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut names: Vec<String> = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("node\t"))
        .map(|l| l.split('\t').next_back().unwrap_or("").trim().to_string())
        .collect();
    if names.len() != n {
        bail!("{} lists {} nodes, the network has {n}", path.display(), names.len());
    }
    let mut distinct = names.clone();
    distinct.sort();
    distinct.dedup();
    Ok(names
        .drain(..)
        .map(|c| distinct.binary_search(&c).unwrap_or(0))
        .collect())
}

pub fn fuzziness(args: &FuzzinessArgs, out: &mut Output) -> Result<()> {
    let a = load_network(&args.input)?;
    let n = a.n();
    let labels = a.node_labels();
    let method = bootstrap_method(&args.method, n)?;
    if method == BootstrapMethod::TrueResample {
        bail!("true-resample needs a known model");
    }
    let b = args.b.unwrap_or(DEFAULT_B);
    let d = args.d.ok_or_else(|| anyhow!("the joint embedding dimension `d` is required"))?;
    let sd_threshold = args.sd_threshold.unwrap_or(DEFAULT_SD_THRESHOLD);
    let batch = method.generate(&a, None, b, derive_seed(out.seed, &[tag::BOOTSTRAP]))?;
    let (_, unc) = node_uncertainty(&a, &batch, d)?;
    let f = fuzziness_matrix(&unc, sd_threshold)?;

    let mut buf = Vec::new();
    write_node_uncertainty_json(&unc, labels, &mut buf)?;
    out.write("node_uncertainty.json", &buf)?;
    let mut buf = Vec::new();
    f.write_tsv(&mut buf)?;
    out.write("fuzziness.tsv", &buf)?;

    let have_pairs = f.pair_count() > 0;
    if !have_pairs {
        warn!("no node pairs overlap at sd_threshold {sd_threshold}; the fuzziness score is undefined");
    }
    let base = TsneConfig {
        iterations: args.iterations.unwrap_or(TsneConfig::default().iterations),
        ..TsneConfig::default()
    };
    let mut perplexity = args.perplexity;
    let layout: Layout2D = match &args.layout {
        Some(path) => {
            if args.perplexity.is_some() || args.perplexities.is_some() {
                warn!("an external layout is given; perplexity settings are ignored");
            }
            perplexity = None;
            read_layout_csv(path, n)?
        }
        None => {
            if let Some(ps) = &args.perplexities {
                if have_pairs {
                    let scan = perplexity_scan(&a, &f, ps, out.seed, &base)?;
                    let mut csv = String::from("perplexity,score\n");
                    for (p, s) in &scan.points {
                        csv.push_str(&format!("{p},{s}\n"));
                    }
                    out.write("perplexity.csv", csv.as_bytes())?;
                    out.write(
                        "perplexity.svg",
                        svg::curve_plot("fuzziness score against perplexity", "perplexity", "fuzziness score", &scan.points, None)
                            .as_bytes(),
                    )?;
                    if args.perplexity.is_none() {
                        perplexity = Some(scan.best_perplexity());
                    }
                } else {
                    warn!("perplexity scan skipped: no overlapping pairs to score");
                }
            }
            let p = perplexity.unwrap_or_else(|| DEFAULT_PERPLEXITY.min((n as f64 - 1.0) / 3.0).max(1.5));
            perplexity = Some(p);
            tsne_layout_with(&a, &TsneConfig { perplexity: p, ..base }, out.seed)?
        }
    };
    let mut buf = Vec::new();
    write_layout_csv(&layout, labels, &mut buf)?;
    out.write("layout.csv", &buf)?;

    let score = if have_pairs { Some(fuzziness_score(&layout, &f)?) } else { None };
    out.write_json(
        "score.json",
        &json!({
            "score": score,
            "sd": score.map(f64::sqrt),
            "pairs": f.pair_count(),
            "sd_threshold": sd_threshold,
            "d": d,
            "b": b,
            "perplexity": perplexity,
            "layout_source": layout.source(),
        }),
    )?;

    let classes = match &args.classes {
        Some(p) => read_classes(p, n)?,
        None => vec![0; n],
    };
    let pos: Vec<(f64, f64)> = layout.positions().row_iter().map(|r| (r[0], r[1])).collect();
    let edges: Vec<(usize, usize)> = f.pairs().collect();
    let title = match score {
        Some(s) => format!("overlapping pairs (fuzziness score {s:.3})"),
        None => "overlapping pairs (none)".to_string(),
    };
    out.write("overlay.svg", svg::overlay_plot(&title, &pos, &classes, &edges).as_bytes())?;
    match score {
        Some(s) => println!("fuzziness score = {s:.6} over {} pairs", f.pair_count()),
        None => println!("fuzziness score undefined: no overlapping pairs"),
    }
    Ok(())
}
