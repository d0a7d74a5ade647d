use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use hyphc::codec::{exact_decode, greedy_decode};
use hyphc::pipeline::artifacts::{Checkpoint, Record};
use hyphc::pipeline::data::{load_labels, load_names};
use hyphc::pipeline::{
    self, evaluate, load_config, load_input, run, run_best_of, Decoder, InputKind, Method,
    RunConfig, SimilarityKind, TripletSampling, DEFAULT_BATCH_SIZE, DEFAULT_CHECKPOINT_EVERY,
};
use hyphc::trees::{cost_bounds, BoundSampling};
use hyphc::{Dendrogram, Error, Result, SimilarityMatrix};

#[derive(Parser)]
#[command(name = "hyphc", version, about = "Hyperbolic hierarchical clustering")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a feature CSV into a similarity matrix CSV.
    Similarity {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SimKind::ShiftedCosine)]
        similarity: SimKind,
        #[arg(long)]
        output: PathBuf,
    },
    /// Lower and upper bounds on the Dasgupta cost.
    Bounds {
        #[command(flatten)]
        data: DataArgs,
        /// Estimate from this many sampled triplets instead of all of them.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit a hyperbolic embedding and decode it into a tree.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run seeds 0..N and keep the lowest cost.
        #[arg(long)]
        best_of: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run a discrete baseline.
    Baseline {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Local-search restarts per split (bkm).
        #[arg(long, default_value_t = hyphc::baselines::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long)]
        best_of: Option<u64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Decode a checkpoint into a Newick tree.
    Decode {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = DecoderArg::Greedy)]
        decoder: DecoderArg,
        #[arg(long)]
        names: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Repeat a run from its `config.json`.
    Rerun {
        #[arg(long)]
        config: PathBuf,
        /// Write to this directory instead of the recorded one.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cost, bounds and purity of a Newick tree.
    Eval {
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Write metrics here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Feature or similarity CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Features)]
    input_kind: Kind,
    #[arg(long, value_enum, default_value_t = SimKind::ShiftedCosine)]
    similarity: SimKind,
    /// One class label per row.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// One leaf name per row, with a header line.
    #[arg(long)]
    names: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = hyphc::optim::DEFAULT_LR)]
    lr: f64,
    #[arg(long, default_value_t = hyphc::loss::DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = hyphc::optim::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long, default_value_t = hyphc::optim::DEFAULT_INIT_SCALE)]
    init_scale: f64,
    #[arg(long, value_enum, default_value_t = TripletArg::Quadratic)]
    triplets: TripletArg,
    /// Triplets per epoch with `--triplets fixed`.
    #[arg(long)]
    triplet_count: Option<usize>,
    #[arg(long, value_enum, default_value_t = DecoderArg::Greedy)]
    decoder: DecoderArg,
    #[arg(long, default_value_t = DEFAULT_CHECKPOINT_EVERY)]
    checkpoint_every: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Features,
    Similarities,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    Cosine,
    ShiftedCosine,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Sl,
    Al,
    Cl,
    Wl,
    Bkm,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum TripletArg {
    All,
    Quadratic,
    Fixed,
}

impl From<SimKind> for SimilarityKind {
    fn from(k: SimKind) -> Self {
        match k {
            SimKind::Cosine => SimilarityKind::Cosine,
            SimKind::ShiftedCosine => SimilarityKind::ShiftedCosine,
        }
    }
}

impl From<DecoderArg> for Decoder {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Exact => Decoder::Exact,
            DecoderArg::Greedy => Decoder::Greedy,
        }
    }
}

impl DataArgs {
    fn config(&self, method: Method, output: PathBuf) -> RunConfig {
        let mut c = RunConfig::new(&self.input, method, output);
        c.input_kind = match self.input_kind {
            Kind::Features => InputKind::Features,
            Kind::Similarities => InputKind::Similarities,
        };
        c.similarity = self.similarity.into();
        c.labels = self.labels.clone();
        c.names = self.names.clone();
        c
    }

    fn load(&self) -> Result<SimilarityMatrix<f64>> {
        load_input(&self.config(Method::Hyphc, PathBuf::new()))
    }
}

fn train_config(data: &DataArgs, t: &TrainArgs, seed: u64, output: PathBuf) -> Result<RunConfig> {
    let mut c = data.config(Method::Hyphc, output);
    c.seed = seed;
    c.lr = t.lr;
    c.tau = t.tau;
    c.epochs = t.epochs;
    c.batch_size = t.batch_size;
    c.init_scale = t.init_scale;
    c.decoder = t.decoder.into();
    c.checkpoint_every = t.checkpoint_every;
    c.triplets = match (t.triplets, t.triplet_count) {
        (TripletArg::Fixed, Some(m)) => TripletSampling::FixedCount(m),
        (TripletArg::Fixed, None) => {
            return Err(Error::InvalidArgument(
                "--triplets fixed needs --triplet-count".into(),
            ))
        }
        (_, Some(_)) => {
            return Err(Error::InvalidArgument(
                "--triplet-count only applies to --triplets fixed".into(),
            ))
        }
        (TripletArg::All, None) => TripletSampling::All,
        (TripletArg::Quadratic, None) => TripletSampling::Quadratic,
    };
    Ok(c)
}

fn execute(config: &RunConfig, best_of: Option<u64>) -> Result<()> {
    match best_of {
        Some(0) => Err(Error::InvalidArgument("--best-of must be positive".into())),
        Some(k) => {
            let b = run_best_of(config, k)?;
            let best = &b.runs[b.best];
            println!("best_seed={}", b.best);
            print!("{}", best.metrics.render());
            Ok(())
        }
        None => {
            let a = run(config)?;
            print!("{}", a.metrics.render());
            Ok(())
        }
    }
}

fn write_or_print(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Similarity {
            input,
            similarity,
            output,
        } => {
            let mut c = RunConfig::new(input, Method::Hyphc, PathBuf::new());
            c.similarity = similarity.into();
            let w = load_input(&c)?;
            let mut out = csv::Writer::from_path(&output).map_err(Error::from)?;
            for i in 0..w.n() {
                out.write_record(w.row(i).iter().map(|v| v.to_string()))
                    .map_err(Error::from)?;
            }
            out.flush()?;
            Ok(())
        }
        Command::Bounds {
            data,
            samples,
            repeats,
            seed,
        } => {
            let w = data.load()?;
            let (b, mode) = match samples {
                Some(count) => (
                    cost_bounds(
                        &w,
                        BoundSampling::Sampled {
                            count,
                            seed,
                            repeats,
                        },
                    )?,
                    "sampled",
                ),
                None => (cost_bounds(&w, BoundSampling::Exact)?, "exact"),
            };
            let mut r = Record::default();
            r.push("n", w.n());
            r.push("lower_bound", b.lower);
            r.push("upper_bound", b.upper);
            r.push("lower_bound_ordered", 2.0 * b.lower);
            r.push("upper_bound_ordered", 2.0 * b.upper);
            r.push("bounds_mode", mode);
            print!("{}", r.render());
            Ok(())
        }
        Command::Train {
            data,
            train,
            seed,
            best_of,
            output,
        } => {
            let c = train_config(&data, &train, seed, output)?;
            execute(&c, best_of)
        }
        Command::Baseline {
            data,
            method,
            seed,
            restarts,
            best_of,
            output,
        } => {
            let m = match method {
                BaselineMethod::Sl => Method::Sl,
                BaselineMethod::Al => Method::Al,
                BaselineMethod::Cl => Method::Cl,
                BaselineMethod::Wl => Method::Wl,
                BaselineMethod::Bkm => Method::Bkm,
            };
            let mut c = data.config(m, output);
            c.seed = seed;
            c.restarts = restarts;
            execute(&c, best_of)
        }
        Command::Decode {
            checkpoint,
            decoder,
            names,
            output,
        } => {
            let z = Checkpoint::load(&checkpoint)?.embedding()?;
            let t = match decoder {
                DecoderArg::Exact => exact_decode(&z)?,
                DecoderArg::Greedy => greedy_decode(&z)?,
            };
            let names = names.map(|p| load_names(&p)).transpose()?;
            fs::write(&output, format!("{}\n", t.to_newick(names.as_deref())?))?;
            Ok(())
        }
        Command::Rerun { config, output } => {
            let mut c = load_config(&config)?;
            if let Some(o) = output {
                c.output = o;
            }
            execute(&c, None)
        }
        Command::Eval { tree, data, output } => {
            let w = data.load()?;
            let names = data.names.as_ref().map(|p| load_names(p)).transpose()?;
            let t = Dendrogram::from_newick(&fs::read_to_string(&tree)?, names.as_deref())?;
            if t.n_leaves() != w.n() {
                return Err(Error::SizeMismatch {
                    what: "tree leaves",
                    got: t.n_leaves(),
                    expected: w.n(),
                });
            }
            let labels = data
                .labels
                .as_ref()
                .map(|p| load_labels(p))
                .transpose()?
                .map(|(ids, _)| ids);
            let r = evaluate(&t, &w, labels.as_deref())?;
            let mut out = Record::default();
            out.push(
                "similarity_sha256",
                pipeline::artifacts::similarity_checksum(&w),
            );
            for (k, v) in r.entries() {
                out.push(k, v);
            }
            write_or_print(output.as_deref(), &out.render())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
