use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dunkl_czo_lab::cli::{run, summary, RunConfig};

/// Numerical verification laboratory for Dunkl commutator kernels.
#[derive(Parser)]
#[command(name = "dunkl-czo-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites from a JSON config and write reports.
    Run {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Run a single suite (overrides the config's suite list).
        #[arg(long)]
        suite: Option<String>,
        /// RNG seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Multiplicity override, comma-separated (e.g. `0.5,1`).
        #[arg(long)]
        kappa: Option<String>,
        /// Group override: preset name, `z2n`, or a root-system JSON path.
        #[arg(long)]
        group: Option<String>,
    },
    /// Print a console table over all reports found under a directory.
    Summary {
        /// Directory holding run subdirectories (or a single run directory).
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_kappa(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad kappa `{t}`: {e}")))
        .collect()
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, suite, seed, out, kappa, group } => {
            let mut cfg = match RunConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(s) = suite {
                cfg.suites = vec![s];
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(k) = kappa {
                match parse_kappa(&k) {
                    Ok(v) => cfg.kappa = v,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
            }
            if let Some(g) = group {
                cfg.group = g;
            }
            match run(&cfg) {
                Ok(outcome) => {
                    println!("reports written to {}", outcome.dir.display());
                    match summary(&outcome.dir) {
                        Ok(table) => print!("{table}"),
                        Err(e) => eprintln!("warning: could not summarize: {e}"),
                    }
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Summary { out } => match summary(&out) {
            Ok(table) => {
                print!("{table}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
