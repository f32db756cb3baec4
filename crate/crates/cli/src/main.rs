//! `wavedecay`: run decay experiments from TOML configuration files.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ExperimentConfig, KINDS};

const EXIT_INVALID: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const DEFAULT_OUT: &str = "wavedecay-runs";

#[derive(Parser)]
#[command(name = "wavedecay", version, about = "Deterministic decay experiments for traveling-wave perturbations")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiments; several configs run concurrently.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output root (overrides `output_dir` and WAVEDECAY_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List experiment kinds.
    List,
    /// Parse and validate configs without running them.
    Validate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match cli.command {
        Command::List => {
            list();
            0
        }
        Command::Validate { configs } => configs.iter().map(|p| validate(p)).max().unwrap_or(0),
        Command::Run { configs, out } => {
            let codes: Vec<u8> = std::thread::scope(|s| {
                let handles: Vec<_> = configs.iter().map(|p| s.spawn(|| run(p, out.as_deref()))).collect();
                handles.into_iter().map(|h| h.join().unwrap_or(EXIT_RUNTIME)).collect()
            });
            codes.into_iter().max().unwrap_or(0)
        }
    };
    ExitCode::from(code)
}

fn list() {
    for k in &KINDS {
        println!("{:<17} {}", k.name, k.validates);
        println!("{:<17} keys: {}", "", k.keys);
    }
}

fn validate(path: &Path) -> u8 {
    match ExperimentConfig::load(path) {
        Ok(c) => {
            println!("{}: ok ({}, {})", path.display(), c.experiment.kind(), c.dir_name());
            0
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            EXIT_INVALID
        }
    }
}

fn output_root(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output_root.clone())
        .or_else(|| std::env::var_os("WAVEDECAY_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run(path: &Path, out: Option<&Path>) -> u8 {
    let config = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return EXIT_INVALID;
        }
    };
    match run_config(path, &config, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}: {e:#}", path.display());
            EXIT_RUNTIME
        }
    }
}

fn run_config(path: &Path, config: &ExperimentConfig, out: Option<&Path>) -> anyhow::Result<u8> {
    let dir = output_root(out, config).join(config.dir_name());
    if dir.exists() {
        std::fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
    }
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let meta = json!({
        "kind": config.experiment.kind(),
        "config_hash": config.hash(),
        "seed": config.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    write_json(&dir.join("meta.json"), &meta)?;

    log::info!("{}: running {} into {}", path.display(), config.experiment.kind(), dir.display());
    let start = Instant::now();
    let outcome = experiments::execute(config, &dir);
    let seconds = start.elapsed().as_secs_f64();
    let mut report = json!({
        "kind": config.experiment.kind(),
        "config_hash": config.hash(),
        "seed": config.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "wall_clock_seconds": seconds,
    });
    let code = match outcome {
        Ok(o) => {
            let status = match o.passed {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "done",
            };
            report["status"] = json!(status);
            report["passed"] = json!(o.passed);
            report["results"] = o.results;
            report["artifacts"] = json!(o.artifacts);
            println!("{status:<4} {} -> {} ({seconds:.1} s)", path.display(), dir.display());
            if o.passed == Some(false) {
                EXIT_RUNTIME
            } else {
                0
            }
        }
        Err(e) => {
            report["status"] = json!("error");
            report["error"] = json!(format!("{e:#}"));
            eprintln!("{}: {e:#}", path.display());
            EXIT_RUNTIME
        }
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(code)
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
