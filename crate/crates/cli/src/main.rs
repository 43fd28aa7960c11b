use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use excursion_core::experiments::{self, ExperimentConfig, ExperimentKind};
use excursion_core::Error;

const VALIDATION_FAILURE: u8 = 2;
const RUNTIME_FAILURE: u8 = 3;
const COUNTEREXAMPLE: u8 = 4;

#[derive(Parser)]
#[command(name = "excursion-lab", version, about = "Excursion-set percolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides mc.master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides mc.workers.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write one field sample in the field file format.
    FieldDump {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    experiments::parse_config(&text)
}

fn report_diagnostics(diags: &[String]) -> ExitCode {
    for d in diags {
        eprintln!("error: {d}");
    }
    ExitCode::from(VALIDATION_FAILURE)
}

fn execute(cfg: &ExperimentConfig) -> ExitCode {
    let diags = experiments::validate(cfg);
    if !diags.is_empty() {
        return report_diagnostics(&diags);
    }
    match experiments::run(cfg) {
        Ok(out) => {
            println!("{}", out.manifest_path.display());
            if out.counterexamples > 0 {
                eprintln!("{} counterexample(s) written to {}", out.counterexamples, cfg.output.display());
                ExitCode::from(COUNTEREXAMPLE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Error::Validation(d)) => report_diagnostics(&d),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(RUNTIME_FAILURE)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, workers } => match load(&config) {
            Ok(mut cfg) => {
                if seed.is_some() {
                    cfg.mc.master_seed = seed;
                }
                if workers.is_some() {
                    cfg.mc.workers = workers;
                }
                execute(&cfg)
            }
            Err(d) => report_diagnostics(&d),
        },
        Command::Validate { config } => {
            let diags = match load(&config) {
                Ok(cfg) => experiments::validate(&cfg),
                Err(d) => d,
            };
            if diags.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                report_diagnostics(&diags)
            }
        }
        Command::FieldDump { config } => match load(&config) {
            Ok(mut cfg) => {
                cfg.kind = ExperimentKind::FieldDump;
                execute(&cfg)
            }
            Err(d) => report_diagnostics(&d),
        },
    }
}
