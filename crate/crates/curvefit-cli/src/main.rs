//! `curvefit` — CLI harness for the differentiable curve-fitting library.
//!
//! Exit codes: 0 success, 1 configuration or argument problems, 2 numeric
//! failures (degenerate systems, divergence), 3 tolerance failures from
//! `check`.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "curvefit", version, about = "Differentiable least-squares curve fitting harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the toy point-descent experiment and dump its trajectory.
    Toy {
        /// TOML config file.
        config: PathBuf,
        /// Override the descent mode: coords, weights or both.
        #[arg(long)]
        mode: Option<String>,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic scene set and write one .lsim file per scene.
    GenScenes {
        /// TOML config file.
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a weight generator on synthetic scenes.
    Train {
        /// TOML config file.
        config: PathBuf,
        /// Training regime: end2end or xent.
        #[arg(long)]
        regime: String,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate saved generator parameters on a scene set.
    Eval {
        /// TOML config file.
        config: PathBuf,
        /// Path for the per-curve CSV report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run randomized self-checks against oracles and finite differences.
    Check {
        /// Restrict to one suite: grads, losses or oracle.
        #[arg(long)]
        suite: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too and must exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Toy { config, mode, out } => commands::cmd_toy(&config, mode.as_deref(), out),
        Cmd::GenScenes { config, out } => commands::cmd_gen_scenes(&config, out),
        Cmd::Train { config, regime, out } => commands::cmd_train(&config, &regime, out),
        Cmd::Eval { config, report } => commands::cmd_eval(&config, report),
        Cmd::Check { suite } => commands::cmd_check(suite.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
