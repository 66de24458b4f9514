use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use subpure::encoder::Batch;
use subpure::pipeline::{self, AnsatzMode, PipelineConfig};
use subpure::Error;

#[derive(Parser)]
#[command(name = "subpure", version, about = "Purity-driven qubit compression of Bars-and-Stripes data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the dataset.
    GenData(Opts),
    /// Train the encoder circuit.
    TrainEncoder(Opts),
    /// Compress every sample and check the round trip.
    Compress(Opts),
    /// Split the compact states and train the classifier.
    TrainClassifier(Opts),
    /// Score the classifier on both splits.
    Evaluate(Opts),
    /// Summarize circuit evaluations, shots and post-selection rates.
    Report(Opts),
    /// Every stage in order.
    Run(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Generic,
    BlockDiagonal,
}

#[derive(Args)]
struct Opts {
    /// Grid side (power of two).
    #[arg(long, default_value_t = 8)]
    side: usize,
    /// Number of sampled patterns; defaults to all patterns for side 8 and
    /// 1000 for larger grids.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for sampling, splitting and every initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Encoder depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Encoder learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Encoder iterations per initialization.
    #[arg(long)]
    iters: Option<usize>,
    /// Encoder convergence tolerance on 2 - C_AB.
    #[arg(long)]
    tol: Option<f64>,
    /// Encoder initializations to try.
    #[arg(long)]
    restarts: Option<usize>,
    /// Encoder minibatch size; full batch when absent.
    #[arg(long)]
    batch: Option<usize>,
    /// Largest per-sample purity residual accepted for compression.
    #[arg(long)]
    compress_tol: Option<f64>,
    /// Shots per swap-test purity estimate; enables swap-test mode.
    #[arg(long)]
    shots: Option<usize>,
    /// Classifier readout qubit.
    #[arg(long)]
    readout: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::BlockDiagonal)]
    ansatz_mode: Mode,
    /// Classifier depth.
    #[arg(long)]
    clf_depth: Option<usize>,
    /// Classifier learning rate.
    #[arg(long)]
    clf_lr: Option<f64>,
    /// Classifier iterations.
    #[arg(long)]
    clf_iters: Option<usize>,
    /// Train the block-diagonal classifier on reweighted gradients.
    #[arg(long)]
    reweight: bool,
    /// Training-set size.
    #[arg(long)]
    train_count: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run directory name under --out; defaults to bas<side>-s<seed>.
    #[arg(long)]
    run_id: Option<String>,
}

impl Opts {
    fn config(&self) -> PipelineConfig {
        let mut c = PipelineConfig::for_side(self.side);
        c.out_dir = self.out.clone();
        c.run_id = self
            .run_id
            .clone()
            .unwrap_or_else(|| format!("bas{}-s{}", self.side, self.seed));
        if self.samples.is_some() {
            c.samples = self.samples;
        }
        c.data_seed = self.seed;
        c.split_seed = self.seed;
        c.shot_seed = self.seed;
        c.train_count = self.train_count;
        c.stage1.seed = self.seed;
        set(&mut c.stage1.depth, self.depth);
        set(&mut c.stage1.learning_rate, self.lr);
        set(&mut c.stage1.max_iters, self.iters);
        set(&mut c.stage1.convergence_tol, self.tol);
        set(&mut c.stage1.restarts, self.restarts);
        if let Some(size) = self.batch {
            c.stage1.batch = Batch::Minibatch {
                size,
                seed: self.seed,
            };
        }
        set(&mut c.compress_tolerance, self.compress_tol);
        c.shots = self.shots;
        c.classifier.mode = match self.ansatz_mode {
            Mode::Generic => AnsatzMode::Generic,
            Mode::BlockDiagonal => AnsatzMode::BlockDiagonal,
        };
        c.classifier.readout = self.readout;
        c.classifier.seed = self.seed;
        c.classifier.reweight = self.reweight;
        set(&mut c.classifier.depth, self.clf_depth);
        set(&mut c.classifier.learning_rate, self.clf_lr);
        set(&mut c.classifier.max_iters, self.clf_iters);
        c
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, opts) = match &cli.command {
        Command::GenData(o) => (Some("gen-data"), o),
        Command::TrainEncoder(o) => (Some("train-encoder"), o),
        Command::Compress(o) => (Some("compress"), o),
        Command::TrainClassifier(o) => (Some("train-classifier"), o),
        Command::Evaluate(o) => (Some("evaluate"), o),
        Command::Report(o) => (Some("report"), o),
        Command::Run(o) => (None, o),
    };
    let config = opts.config();
    let result = match stage {
        Some(s) => pipeline::run_stage(&config, s),
        None => pipeline::run_pipeline(&config),
    };
    match result {
        Ok(()) => {
            println!("{}", config.run_dir().display());
            ExitCode::SUCCESS
        }
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Error::Stage { stage, source }) => {
            eprintln!("stage {stage} failed: {source}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
