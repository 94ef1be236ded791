//! Command-line front end: argument parsing, config layering and the
//! value / detect / removal / bench / fetch pipelines.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, fetch, RunContext};
pub use config::{CommandKind, Method, Settings};
pub use output::{fmt_f64, manifest_hash, OutputDir};

use crate::error::{Error, Result};

/// Environment variable naming the OpenML cache directory.
pub const CACHE_ENV: &str = "DATAOOB_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dataoob", version, about = "Out-of-bag data valuation and its benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Compute per-point values and write values.csv.
    Value(RunArgs),
    /// Flip labels, value, and score mislabel detection.
    Detect(RunArgs),
    /// Retrain after removing low-value points.
    Removal(RunArgs),
    /// Time valuators over a grid of training-set sizes.
    Bench(RunArgs),
    /// Download an OpenML dataset into the cache.
    Fetch {
        #[arg(long)]
        openml: u64,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON settings file, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    #[arg(long)]
    openml: Option<u64>,
    #[arg(long)]
    synthetic: bool,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    val_fraction: Option<f64>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    corruption_rate: Option<f64>,

    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Number of bootstrap trees.
    #[arg(long)]
    b: Option<usize>,
    /// Neighbors for KNN Shapley.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    gr_threshold: Option<f64>,
    #[arg(long)]
    max_samples_per_chain: Option<usize>,
    #[arg(long)]
    check_every: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    probabilities: Option<Vec<f64>>,
    #[arg(long)]
    subsets_per_p: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    stride: Option<f64>,

    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Per-run time limit in seconds for bench.
    #[arg(long)]
    timeout: Option<f64>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

impl RunArgs {
    fn settings(&self, command: CommandKind) -> Settings {
        Settings {
            command: Some(command),
            csv: self.csv.clone(),
            label_column: self.label_column.clone(),
            openml: self.openml,
            synthetic: self.synthetic.then_some(true),
            dim: self.dim,
            n: self.n,
            val_fraction: self.val_fraction,
            test_size: self.test_size,
            corruption_rate: self.corruption_rate,
            method: self.method,
            b: self.b,
            k: self.k,
            chains: self.chains,
            gr_threshold: self.gr_threshold,
            max_samples_per_chain: self.max_samples_per_chain,
            check_every: self.check_every,
            alpha: self.alpha,
            beta: self.beta,
            probabilities: self.probabilities.clone(),
            subsets_per_p: self.subsets_per_p,
            folds: self.folds,
            stride: self.stride,
            methods: self.methods.clone(),
            n_grid: self.n_grid.clone(),
            repetitions: self.repetitions,
            timeout: self.timeout,
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
        }
    }
}

fn cache_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("dataoob")))
        .unwrap_or_else(|| PathBuf::from(".dataoob-cache"))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn run_command(command: CommandKind, args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => Settings::from_json(&std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?)?,
        None => Settings::default(),
    };
    let mut cli = args.settings(command);
    if file.command.is_some_and(|c| c != command) {
        log::warn!("config was written for '{}'; running '{}'", file.command.map_or("", CommandKind::name), command.name());
    }
    cli.command = Some(command);
    let merged = file.overlay(&cli);
    let resolved = merged.resolve()?;
    let ctx = RunContext {
        out_dir: merged.out.clone().unwrap_or_else(|| PathBuf::from("dataoob-out")),
        cache_dir: cache_dir(args.cache_dir),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = merged.workers {
        if w == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| execute(&resolved, &ctx))?;
    log::info!("wrote outputs to {}", ctx.out_dir.display());
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Sub::Value(a) => run_command(CommandKind::Value, a),
        Sub::Detect(a) => run_command(CommandKind::Detect, a),
        Sub::Removal(a) => run_command(CommandKind::Removal, a),
        Sub::Bench(a) => run_command(CommandKind::Bench, a),
        Sub::Fetch { openml, cache_dir: dir } => fetch(openml, &cache_dir(dir)).map(|p| println!("{}", p.display())),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
