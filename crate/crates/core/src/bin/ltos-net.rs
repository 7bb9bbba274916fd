use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ltos_core::harness::{run, seed_offset_from_env, Command, RunManifest, RunMethod};
use ltos_core::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Train,
    Oracle,
    Matrix,
}

/// Train and evaluate reward-sharing agents.
#[derive(Debug, Parser)]
#[command(name = "ltos-net", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// key=value configuration file
    #[arg(long)]
    config: PathBuf,
    /// ltos, fixed, independent, oracle or matrix
    #[arg(long, default_value = "ltos")]
    method: String,
    /// Comma-separated seeds; defaults to the config's list
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Override the configured episode count
    #[arg(long)]
    episodes: Option<usize>,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("ltos-net: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let method: RunMethod = match cli.method.parse() {
        Ok(m) => m,
        Err(e) => return usage(e),
    };
    let seeds = match cli.seeds.as_deref().map(ltos_core::harness::parse_seeds) {
        Some(None) => return usage(format!("bad seed list `{}`", cli.seeds.unwrap_or_default())),
        Some(s) => s,
        None => None,
    };
    let seed_offset = match seed_offset_from_env() {
        Ok(o) => o,
        Err(e) => return usage(e),
    };
    let manifest = RunManifest {
        command: match cli.command {
            Cmd::Train => Command::Train,
            Cmd::Oracle => Command::Oracle,
            Cmd::Matrix => Command::Matrix,
        },
        config_path: cli.config,
        method,
        seeds,
        out: cli.out,
        episodes: cli.episodes,
        seed_offset,
    };
    match run(&manifest) {
        Ok(report) => {
            println!("{}", report.summary);
            for s in report.seeds.iter().filter(|s| s.error.is_some()) {
                eprintln!("seed {} failed: {}", s.seed, s.error.as_deref().unwrap_or(""));
            }
            if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e @ Error::Config { .. }) => usage(e),
        Err(e) => {
            eprintln!("ltos-net: {e}");
            ExitCode::FAILURE
        }
    }
}
