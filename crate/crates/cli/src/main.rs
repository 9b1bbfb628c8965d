use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gstlab::Error;
use gstlab_cli::commands::{self, Outcome};
use gstlab_cli::config::ExperimentConfig;

/// Ground-state-transformed Lévy processes: spectral solves, simulation and
/// envelope tests.
#[derive(Debug, Parser)]
#[command(name = "gstlab", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel path farms and quadrature.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the ground state and store the solution artifact.
    Solve,
    /// Sample paths of the transformed process.
    Simulate,
    /// Run integral tests, escape-constant lookup and empirical limsup.
    Envelope,
    /// Run an acceptance suite with pinned seeds.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Summarize the outputs present in the output directory.
    Report,
}

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config {
        path: "--config".into(),
        reason: "this command needs a configuration file".into(),
    })?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(gstlab_cli::config::DEFAULT_OUTPUT_DIR))
}

fn finish(out: &Path, command: &str, cfg: Option<&ExperimentConfig>, started: f64, outcome: Outcome) -> Result<bool, Error> {
    for m in &outcome.messages {
        println!("{m}");
    }
    commands::update_manifest(out, command, cfg, started, &outcome)?;
    Ok(outcome.passed)
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    match &cli.command {
        Command::Solve => {
            let cfg = load_config(cli)?;
            let out = cfg.output_dir();
            let (_, outcome) = commands::cmd_solve(&cfg, &out)?;
            finish(&out, "solve", Some(&cfg), started, outcome)
        }
        Command::Simulate => {
            let cfg = load_config(cli)?;
            let out = cfg.output_dir();
            let outcome = commands::cmd_simulate(&cfg, &out)?;
            finish(&out, "simulate", Some(&cfg), started, outcome)
        }
        Command::Envelope => {
            let cfg = load_config(cli)?;
            let out = cfg.output_dir();
            let outcome = commands::cmd_envelope(&cfg, &out)?;
            finish(&out, "envelope", Some(&cfg), started, outcome)
        }
        Command::Verify { suite } => {
            let out = out_dir(cli);
            let (_, outcome) = commands::cmd_verify(suite, &out)?;
            finish(&out, "verify", None, started, outcome)
        }
        Command::Report => {
            let out = match &cli.config {
                Some(_) => load_config(cli)?.output_dir(),
                None => out_dir(cli),
            };
            let (md, outcome) = commands::cmd_report(&out)?;
            print!("{md}");
            finish(&out, "report", None, started, outcome)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(EXIT_FAILED)
        }
        Err(e @ (Error::Config { .. } | Error::InvalidParameter { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}
