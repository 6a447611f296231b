use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use czgp_cli::experiment::load_game;
use czgp_cli::output::write_json;
use czgp_cli::{parse_config, report, run_experiment, CliError, ExperimentConfig, SeedStatus};

#[derive(Parser)]
#[command(name = "czgp", version, about = "Learning in repeated contextual games with unknown constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment and write CSV/JSON outputs.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: Option<usize>,
        /// Replace the configured seed list by a single seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Write the game of the first configured seed as JSON.
    GenerateGame {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-aggregate the per-seed CSVs of an output directory.
    Report { out_dir: PathBuf },
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(&path.display().to_string(), &e.to_string()))?;
    parse_config(&text)
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            parallel,
            seed_override,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(p) = parallel {
                if p == 0 {
                    return Err(CliError::config("--parallel", "must be at least 1"));
                }
                cfg.parallel = p;
            }
            if let Some(s) = seed_override {
                cfg.seeds = vec![s];
            }
            let out_dir = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let result = run_experiment(&cfg, Some(&out_dir), config.parent())?;
            for o in &result.outcomes {
                let line = match &o.status {
                    SeedStatus::Completed => "completed".to_string(),
                    SeedStatus::InfeasibilityDeclared { player, round } => {
                        format!("infeasibility declared by player {} at round {round}", player + 1)
                    }
                    SeedStatus::Failed { message } => format!("failed: {message}"),
                };
                println!("seed {}: {line}", o.seed);
            }
            println!("wrote {}", out_dir.display());
            Ok(if result.any_failed() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::GenerateGame { config, out } => {
            let cfg = load_config(&config)?;
            let game = load_game(&cfg, cfg.seeds[0], config.parent())?;
            write_json(&out, &game)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { out_dir } => {
            let rep = report::report(&out_dir)?;
            let last = rep.horizon.saturating_sub(1);
            for (i, curve) in rep.aggregate.regret_mean.iter().enumerate() {
                let v: Vec<String> = rep.aggregate.violations_mean[i]
                    .iter()
                    .map(|c| format!("{:.4}", c.get(last).copied().unwrap_or(0.0)))
                    .collect();
                println!(
                    "player {}: mean final regret {:.4}, mean final violations [{}]",
                    i + 1,
                    curve.get(last).copied().unwrap_or(0.0),
                    v.join(", ")
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
