use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use eulerlab::cli::{self, Outcome};
use eulerlab::config::RunConfig;
use eulerlab::Error;

#[derive(Parser)]
#[command(name = "eulerlab", version, about = "Dissipative solutions of the compressible Euler system")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the initial profile with the configured scheme.
    Simulate,
    /// Run the candidate family and pick the least weighted cost.
    Select,
    /// Push an ensemble forward and report statistics.
    Ensemble,
    /// Weak residuals and totals of snapshots on disk.
    Diagnose {
        /// Directory holding `snapshot_*.csv` files.
        #[arg(long)]
        input: PathBuf,
    },
}

fn execute(args: &Args) -> eulerlab::Result<Outcome> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::Input("--config is required".into()))?;
    let cfg = RunConfig::from_file(path)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
    match &args.command {
        Command::Simulate => cli::cmd_simulate(&cfg, &out),
        Command::Select => cli::cmd_select(&cfg, &out).map(|(o, _)| o),
        Command::Ensemble => cli::cmd_ensemble(&cfg, &out),
        Command::Diagnose { input } => cli::cmd_diagnose(&cfg, input, &out),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            error!("cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| execute(&args).and_then(Outcome::into_result)) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("eulerlab: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
