//! `qrc`: run reservoir sweeps and self-checks from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qrc_core::experiment::{run_experiment, run_verify, Experiment, ExperimentConfig, Preset};

#[derive(Parser)]
#[command(
    name = "qrc",
    version,
    about = "Quantum reservoir computing sweeps with full-history and reset-window drives"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Information processing capacity against reset length.
    IpcSweep(Common),
    /// Lorenz one-step prediction error against reset length.
    LorenzSweep(Common),
    /// Linear memory of every initial state against the full-history baseline.
    InitStudy(Common),
    /// Equivalence, cost-accounting and invariant self-checks.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file overriding keys of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides `master_seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; defaults to `out_dir` from the config, then `results/<subcommand>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base parameter set.
    #[arg(long, default_value = "paper", value_parser = ["desk", "paper"])]
    preset: String,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let preset: Preset = self.preset.parse()?;
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path, preset)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => ExperimentConfig::preset(preset),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn workers(&self, cfg: &ExperimentConfig) -> usize {
        cfg.workers
            .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
            .unwrap_or(1)
            .max(1)
    }
}

fn sweep(exp: Experiment, args: &Common) -> Result<bool> {
    let cfg = args.load()?;
    let workers = args.workers(&cfg);
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(exp.id()));
    eprintln!(
        "{exp}: {} seeds, reset lengths {:?}, {workers} workers",
        cfg.sweep.seeds.len(),
        cfg.reset_lengths()
    );
    let out = run_experiment(exp, &cfg, workers)?;
    let files = out.write(exp, &cfg, workers, &dir)?;
    for f in &files {
        println!("{}", f.display());
    }
    let failed = out
        .failures
        .iter()
        .filter(|f| f.severity == qrc_core::experiment::output::Severity::Error);
    for f in failed {
        eprintln!(
            "failed: {} n={} seed={} {}: {}",
            f.scheme, f.n, f.seed, f.init_state, f.message
        );
    }
    eprintln!(
        "{exp}: {} cells in {:.1} s",
        out.timings.len(),
        out.wall_time.as_secs_f64()
    );
    Ok(out.succeeded())
}

fn verify(args: &Common) -> Result<bool> {
    let cfg = args.load()?;
    let pool = rayon_pool(args.workers(&cfg))?;
    let checks = pool.install(|| run_verify(&cfg))?;
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn rayon_pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::IpcSweep(a) => sweep(Experiment::IpcSweep, a),
        Command::LorenzSweep(a) => sweep(Experiment::LorenzSweep, a),
        Command::InitStudy(a) => sweep(Experiment::InitStudy, a),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
