//! End-to-end runs: load data, fit a hierarchy, decode, evaluate and write
//! the run artifacts.
//!
//! A run directory contains `config.json` (the configuration echo),
//! `similarity.sha256`, `metrics.txt` (deterministic `key=value` lines),
//! `timings.txt`, `tree.nwk` and, for HypHC runs, `embedding.csv` plus
//! periodic `checkpoints/epoch_NNNN.json` and `snapshots/epoch_NNNN.csv`.

pub mod artifacts;
pub mod data;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::baselines::{bisecting_kmeans, linkage, Linkage, DEFAULT_RESTARTS};
use crate::codec::{exact_decode, greedy_decode};
use crate::error::{Error, Result};
use crate::loss::{
    hyphc_loss, sample_triplets, Embedding, Temperature, TripletStrategy, DEFAULT_TAU,
};
use crate::optim::{
    init_embedding, train, AdamConfig, OptimizerState, Sampling, TrainConfig, DEFAULT_EPOCHS,
    DEFAULT_INIT_SCALE, DEFAULT_LR,
};
use crate::trees::{
    cost_bounds, dasgupta_cost, dendrogram_purity, BoundSampling, CostBounds, Dendrogram,
    SimilarityMatrix,
};

use artifacts::{similarity_checksum, write_snapshot, Checkpoint, Record};
use data::{load_features, load_labels, load_names, load_similarity, standardize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    /// One row of numeric features per item.
    Features,
    /// A square similarity matrix.
    Similarities,
}

/// How features are turned into similarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityKind {
    /// Raw cosine similarity in `[-1, 1]`.
    Cosine,
    /// `(1 + cos) / 2`, in `[0, 1]`.
    ShiftedCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Hyphc,
    Sl,
    Al,
    Cl,
    Wl,
    Bkm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hyphc => "hyphc",
            Method::Sl => "sl",
            Method::Al => "al",
            Method::Cl => "cl",
            Method::Wl => "wl",
            Method::Bkm => "bkm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decoder {
    Exact,
    Greedy,
}

/// Per-epoch triplet sampling of a HypHC run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TripletSampling {
    All,
    Quadratic,
    FixedCount(usize),
}

impl From<TripletSampling> for Sampling {
    fn from(s: TripletSampling) -> Self {
        match s {
            TripletSampling::All => Sampling::All,
            TripletSampling::Quadratic => Sampling::Quadratic,
            TripletSampling::FixedCount(m) => Sampling::FixedCount(m),
        }
    }
}

pub const DEFAULT_BATCH_SIZE: usize = 4;
pub const DEFAULT_CHECKPOINT_EVERY: usize = 10;
/// Largest `n` for which bounds are computed exactly.
pub const EXACT_BOUNDS_MAX_N: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    pub input_kind: InputKind,
    pub similarity: SimilarityKind,
    pub labels: Option<PathBuf>,
    pub names: Option<PathBuf>,
    pub method: Method,
    pub seed: u64,
    pub lr: f64,
    pub tau: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub init_scale: f64,
    pub triplets: TripletSampling,
    pub decoder: Decoder,
    pub checkpoint_every: usize,
    pub restarts: usize,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, method: Method, output: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            input_kind: InputKind::Features,
            similarity: SimilarityKind::ShiftedCosine,
            labels: None,
            names: None,
            method,
            seed: 0,
            lr: DEFAULT_LR,
            tau: DEFAULT_TAU,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            init_scale: DEFAULT_INIT_SCALE,
            triplets: TripletSampling::Quadratic,
            decoder: Decoder::Greedy,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
            restarts: DEFAULT_RESTARTS,
            output: output.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr", self.lr),
            ("tau", self.tau),
            ("init-scale", self.init_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        let counts = [
            ("epochs", self.epochs),
            ("batch-size", self.batch_size),
            ("checkpoint-every", self.checkpoint_every),
            ("restarts", self.restarts),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if let TripletSampling::FixedCount(0) = self.triplets {
            return Err(Error::InvalidArgument(
                "fixed triplet count must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Warns about settings that the chosen method does not use.
    fn warn_irrelevant(&self) {
        let d = RunConfig::new("", self.method, "");
        let mut ignored = Vec::new();
        if self.method != Method::Hyphc {
            if self.lr != d.lr {
                ignored.push("lr");
            }
            if self.tau != d.tau {
                ignored.push("tau");
            }
            if self.epochs != d.epochs {
                ignored.push("epochs");
            }
            if self.batch_size != d.batch_size {
                ignored.push("batch-size");
            }
            if self.init_scale != d.init_scale {
                ignored.push("init-scale");
            }
            if self.triplets != d.triplets {
                ignored.push("triplets");
            }
            if self.decoder != d.decoder {
                ignored.push("decoder");
            }
        }
        if self.method != Method::Bkm && self.restarts != d.restarts {
            ignored.push("restarts");
        }
        if !matches!(self.method, Method::Hyphc | Method::Bkm) && self.seed != d.seed {
            ignored.push("seed");
        }
        if self.input_kind == InputKind::Similarities && self.similarity != d.similarity {
            ignored.push("similarity");
        }
        if !ignored.is_empty() {
            warn!(
                "method {} ignores: {}",
                self.method.name(),
                ignored.join(", ")
            );
        }
    }
}

/// Reads a configuration echo written by [`run`].
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads the input of `config` as a similarity matrix.
pub fn load_input(config: &RunConfig) -> Result<SimilarityMatrix<f64>> {
    match config.input_kind {
        InputKind::Similarities => load_similarity(&config.input),
        InputKind::Features => {
            let (f, _) = standardize(&load_features(&config.input)?);
            Ok(match config.similarity {
                SimilarityKind::Cosine => data::cosine_similarity(&f),
                SimilarityKind::ShiftedCosine => data::shifted_cosine_similarity(&f),
            })
        }
    }
}

/// Bounds in exact mode up to [`EXACT_BOUNDS_MAX_N`] leaves, sampled above.
pub fn default_bounds(w: &SimilarityMatrix<f64>) -> Result<(CostBounds<f64>, &'static str)> {
    if w.n() <= EXACT_BOUNDS_MAX_N {
        Ok((cost_bounds(w, BoundSampling::Exact)?, "exact"))
    } else {
        Ok((
            cost_bounds(
                w,
                BoundSampling::Sampled {
                    count: 1_000_000,
                    seed: 0,
                    repeats: 5,
                },
            )?,
            "sampled",
        ))
    }
}

/// Cost, bounds and purity of a tree, as metric lines.
pub fn evaluate(
    t: &Dendrogram,
    w: &SimilarityMatrix<f64>,
    labels: Option<&[usize]>,
) -> Result<Record> {
    let cost = dasgupta_cost(t, w)?;
    let (bounds, mode) = default_bounds(w)?;
    let mut r = Record::default();
    r.push("n", w.n());
    r.push("cost", cost);
    r.push("cost_ordered", 2.0 * cost);
    r.push("lower_bound", bounds.lower);
    r.push("upper_bound", bounds.upper);
    r.push("lower_bound_ordered", 2.0 * bounds.lower);
    r.push("upper_bound_ordered", 2.0 * bounds.upper);
    r.push("bounds_mode", mode);
    if let Some(labels) = labels {
        r.push("purity", dendrogram_purity(t, labels)?);
    }
    Ok(r)
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub tree: Dendrogram,
    pub cost: f64,
    pub bounds: CostBounds<f64>,
    pub purity: Option<f64>,
    pub embedding: Option<Embedding<f64>>,
    pub metrics: Record,
    pub timings: Record,
    pub output: PathBuf,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at_stage(name))
}

fn epoch_file(dir: &Path, epoch: usize, ext: &str) -> PathBuf {
    dir.join(format!("epoch_{epoch:04}.{ext}"))
}

/// Executes one run and writes its artifacts to `config.output`.
pub fn run(config: &RunConfig) -> Result<RunArtifacts> {
    stage("config", config.validate())?;
    config.warn_irrelevant();
    let out = config.output.clone();
    stage("output", fs::create_dir_all(&out).map_err(Error::from))?;
    stage(
        "output",
        fs::write(
            out.join("config.json"),
            serde_json::to_string_pretty(config)?,
        )
        .map_err(Error::from),
    )?;
    let mut timings = Record::default();

    let clock = Instant::now();
    let w = stage("load", load_input(config))?;
    let labels = match &config.labels {
        Some(p) => Some(stage("load", load_labels(p))?.0),
        None => None,
    };
    let names = match &config.names {
        Some(p) => Some(stage("load", load_names(p))?),
        None => None,
    };
    let checksum = similarity_checksum(&w);
    stage(
        "output",
        fs::write(out.join("similarity.sha256"), format!("{checksum}\n")).map_err(Error::from),
    )?;
    timings.push("load_seconds", clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let mut embedding = None;
    let mut extra = Record::default();
    let tree = match config.method {
        Method::Sl | Method::Al | Method::Cl | Method::Wl => {
            let m = match config.method {
                Method::Sl => Linkage::Single,
                Method::Al => Linkage::Average,
                Method::Cl => Linkage::Complete,
                _ => Linkage::Ward,
            };
            stage("fit", linkage(&w, m))?
        }
        Method::Bkm => stage("fit", bisecting_kmeans(&w, config.seed, config.restarts))?,
        Method::Hyphc => {
            let z = stage("fit", fit_hyphc(config, &w, &out, &mut extra))?;
            timings.push("fit_seconds", clock.elapsed().as_secs_f64());
            let decode_clock = Instant::now();
            let t = stage(
                "decode",
                match config.decoder {
                    Decoder::Exact => exact_decode(&z),
                    Decoder::Greedy => greedy_decode(&z),
                },
            )?;
            timings.push("decode_seconds", decode_clock.elapsed().as_secs_f64());
            embedding = Some(z);
            t
        }
    };
    if config.method != Method::Hyphc {
        timings.push("fit_seconds", clock.elapsed().as_secs_f64());
    }

    let clock = Instant::now();
    let eval = stage("evaluate", evaluate(&tree, &w, labels.as_deref()))?;
    timings.push("evaluate_seconds", clock.elapsed().as_secs_f64());

    let mut metrics = Record::default();
    metrics.push("method", config.method.name());
    metrics.push("seed", config.seed);
    metrics.push("similarity_sha256", &checksum);
    for (k, v) in eval.entries() {
        metrics.push(k, v);
    }
    for (k, v) in extra.entries() {
        metrics.push(k, v);
    }
    let cost: f64 = dasgupta_cost(&tree, &w)?;
    let (bounds, _) = default_bounds(&w)?;
    let purity = eval.get("purity").and_then(|p| p.parse().ok());

    let newick = stage("output", tree.to_newick(names.as_deref()))?;
    stage(
        "output",
        fs::write(out.join("tree.nwk"), format!("{newick}\n")).map_err(Error::from),
    )?;
    stage(
        "output",
        fs::write(out.join("metrics.txt"), metrics.render()).map_err(Error::from),
    )?;
    stage(
        "output",
        fs::write(out.join("timings.txt"), timings.render()).map_err(Error::from),
    )?;
    info!(
        "{} seed {}: cost {:.6e} (ordered {:.6e})",
        config.method.name(),
        config.seed,
        cost,
        2.0 * cost
    );
    Ok(RunArtifacts {
        tree,
        cost,
        bounds,
        purity,
        embedding,
        metrics,
        timings,
        output: out,
    })
}

fn fit_hyphc(
    config: &RunConfig,
    w: &SimilarityMatrix<f64>,
    out: &Path,
    extra: &mut Record,
) -> Result<Embedding<f64>> {
    let n = w.n();
    let mut z = init_embedding::<f64>(n, config.seed, config.init_scale)?;
    let mut state = OptimizerState::new(&z, AdamConfig::with_lr(config.lr))?;
    let tau = Temperature::new(config.tau)?;
    let train_config = TrainConfig {
        epochs: config.epochs,
        batch_size: config.batch_size,
        tau,
        sampling: config.triplets.into(),
        seed: config.seed,
    };
    let checkpoints = out.join("checkpoints");
    let snapshots = out.join("snapshots");
    fs::create_dir_all(&checkpoints)?;
    fs::create_dir_all(&snapshots)?;
    Checkpoint::capture(0, &z, &state).save(&epoch_file(&checkpoints, 0, "json"))?;
    write_snapshot(&epoch_file(&snapshots, 0, "csv"), &z)?;

    let every = config.checkpoint_every;
    let mut reinitialized = 0;
    train(&mut z, &mut state, w, &train_config, |report, z, state| {
        let epoch = report.epoch + 1;
        reinitialized += report.reinitialized;
        if epoch % every == 0 || epoch == config.epochs {
            Checkpoint::capture(epoch, z, state).save(&epoch_file(&checkpoints, epoch, "json"))?;
            write_snapshot(&epoch_file(&snapshots, epoch, "csv"), z)?;
        }
        Ok(())
    })?;
    artifacts::write_snapshot(&out.join("embedding.csv"), &z)?;
    extra.push("scale", z.scale());
    extra.push("steps", state.step);
    extra.push("reinitialized_rows", reinitialized);
    if n <= 200 {
        let all = sample_triplets(n, TripletStrategy::All)?;
        extra.push("final_loss", hyphc_loss(&z, w, &all, tau, true)?);
    }
    Ok(z)
}

/// Result of [`run_best_of`].
#[derive(Debug, Clone)]
pub struct BestOf {
    pub runs: Vec<RunArtifacts>,
    pub best: usize,
}

/// Runs seeds `0..seeds` into `output/seed_K` and reports the lowest cost
/// (ties go to the smaller seed) in `output/best.txt`.
pub fn run_best_of(config: &RunConfig, seeds: u64) -> Result<BestOf> {
    if seeds == 0 {
        return Err(Error::InvalidArgument(
            "at least one seed is required".into(),
        ));
    }
    let mut runs = Vec::new();
    for seed in 0..seeds {
        let mut c = config.clone();
        c.seed = seed;
        c.output = config.output.join(format!("seed_{seed}"));
        runs.push(run(&c)?);
    }
    let best = (0..runs.len()).fold(0, |b, i| if runs[i].cost < runs[b].cost { i } else { b });
    let mut r = Record::default();
    r.push("method", config.method.name());
    r.push("seeds", seeds);
    r.push("best_seed", best);
    r.push("best_cost", runs[best].cost);
    r.push("best_cost_ordered", 2.0 * runs[best].cost);
    for (i, a) in runs.iter().enumerate() {
        r.push(&format!("cost_seed_{i}"), a.cost);
    }
    fs::write(config.output.join("best.txt"), r.render())?;
    Ok(BestOf { runs, best })
}
