use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use contest_cli::commands::{
    cmd_score, cmd_select, cmd_simulate, cmd_tournament, cmd_verify_truth, pvalues_path,
};
use contest_cli::config::{
    selector_from_file, simulation_from_file, ConfigFile, ScoringRule, TournamentConfig,
};
use contest_cli::formats::reports_table;
use contest_cli::tournament::summary_to_csv;
use contest_cli::{CliError, Result};
use contest_core::{Method, SelectorParams, SelectorSpec, SimulationConfig};

#[derive(Parser)]
#[command(
    name = "contest",
    version,
    about = "Variable-selection contest on simulated case-control data"
)]
struct Cli {
    /// Seed; overrides any seed in the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a hidden truth and a dataset; prints the commitment digest.
    Simulate {
        /// Also write the latent confounder columns.
        #[arg(long)]
        latent: bool,
    },
    /// Run one selection method on a dataset and write its submission.
    Select {
        #[arg(long)]
        method: String,
        #[arg(long)]
        data: PathBuf,
        /// Team label written into the submission (default: the method name).
        #[arg(long)]
        team: Option<String>,
    },
    /// Score submissions against a revealed truth.
    Score {
        #[arg(long)]
        truth: PathBuf,
        /// table1, proposed, youden, or a weights file.
        #[arg(long, default_value = "table1")]
        weights: String,
        /// Published commitment; scoring is refused if the truth does not match.
        #[arg(long)]
        digest: Option<String>,
        #[arg(required = true)]
        submissions: Vec<PathBuf>,
    },
    /// Run replicated contests and summarise them.
    Tournament {
        /// Run only this replicate (1-based).
        #[arg(long)]
        replicate: Option<usize>,
    },
    /// Check a truth file against a published digest.
    VerifyTruth {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        digest: String,
    },
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    let out = cli.out.clone();
    match cli.command {
        Command::Simulate { latent } => {
            let mut sim: SimulationConfig = simulation_from_file(&config)?;
            if let Some(seed) = cli.seed {
                sim.seed = seed;
            }
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            let outcome = cmd_simulate(&sim, &dir, latent)?;
            println!("{}", outcome.digest);
        }
        Command::Select { method, data, team } => {
            let method = Method::from_str(&method).map_err(|e| CliError::Usage(e.to_string()))?;
            let params: SelectorParams = selector_from_file(&config, method)?;
            let spec = SelectorSpec {
                method,
                params,
                seed: cli.seed.unwrap_or(0),
            };
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.json", method.name())));
            let selection = cmd_select(&data, &spec, team.as_deref(), &out)?;
            let sub = &selection.submission;
            println!("{}: {:?}", sub.team, sub.selected);
            if let Some(n) = selection.subsets_evaluated {
                println!("subsets evaluated: {n}");
            }
            if selection.pvalues.is_some() {
                println!("p-values: {}", pvalues_path(&out).display());
            }
        }
        Command::Score {
            truth,
            weights,
            digest,
            submissions,
        } => {
            let rule = ScoringRule::resolve(&weights)?;
            let reports = cmd_score(
                &truth,
                &submissions,
                &rule,
                digest.as_deref(),
                out.as_deref(),
            )?;
            print!("{}", reports_table(&reports));
        }
        Command::Tournament { replicate } => {
            let mut tournament = TournamentConfig::from_file(&config)?;
            if let Some(seed) = cli.seed {
                tournament.master_seed = seed;
            }
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            let outcome = cmd_tournament(&tournament, &dir, replicate)?;
            print!("{}", summary_to_csv(&outcome.summary));
        }
        Command::VerifyTruth { truth, digest } => {
            cmd_verify_truth(&truth, &digest)?;
            println!("ok");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
