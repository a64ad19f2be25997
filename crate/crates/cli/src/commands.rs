//! One function per CLI verb; the binary only parses arguments and maps errors to exit codes.

use std::path::{Path, PathBuf};

use contest_core::scoring::{contest_score, rank_leaderboard, youden_report};
use contest_core::selectors::run_selector;
use contest_core::sim::{draw_ground_truth, simulate_with_latent};
use contest_core::{ScoreReport, Selection, SelectorSpec, SimulationConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::commitment::{commitment, seal, verify};
use crate::config::{ScoringRule, TournamentConfig};
use crate::error::{CliError, Result};
use crate::formats::{
    dataset_to_csv, latent_to_csv, pvalues_to_csv, read_dataset, read_submission, read_truth,
    reports_to_csv, submission_to_json, truth_to_json, write_file,
};
use crate::tournament::{rows_to_csv, run_tournament, summary_to_csv, TournamentOutcome};

pub const DATASET_FILE: &str = "dataset.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const COMMITMENT_FILE: &str = "commitment.txt";
pub const LATENT_FILE: &str = "latent.csv";
pub const LEADERBOARD_FILE: &str = "leaderboard.csv";
pub const REPLICATES_FILE: &str = "replicates.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateOutcome {
    pub dataset_path: PathBuf,
    pub truth_path: PathBuf,
    pub digest: String,
}

/// Draws a truth and a dataset from `config.seed` and writes them into `out_dir`,
/// together with the commitment digest and, optionally, the latent confounders.
pub fn cmd_simulate(
    config: &SimulationConfig,
    out_dir: &Path,
    latent: bool,
) -> Result<SimulateOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let truth = draw_ground_truth(config, &mut rng)?;
    let simulation = simulate_with_latent(&truth, config, &mut rng)?;
    let sealed = seal(truth, config.seed);
    let digest = commitment(&sealed);

    let dataset_path = out_dir.join(DATASET_FILE);
    let truth_path = out_dir.join(TRUTH_FILE);
    write_file(&dataset_path, &dataset_to_csv(&simulation.dataset))?;
    write_file(&truth_path, &truth_to_json(&sealed))?;
    write_file(&out_dir.join(COMMITMENT_FILE), &format!("{digest}\n"))?;
    if latent {
        write_file(
            &out_dir.join(LATENT_FILE),
            &latent_to_csv(&simulation.latent),
        )?;
    }
    Ok(SimulateOutcome {
        dataset_path,
        truth_path,
        digest,
    })
}

/// Path of the p-value sidecar written next to a submission.
pub fn pvalues_path(submission_path: &Path) -> PathBuf {
    submission_path.with_extension("pvalues.csv")
}

pub fn cmd_select(
    data_path: &Path,
    spec: &SelectorSpec,
    team: Option<&str>,
    out: &Path,
) -> Result<Selection> {
    let data = read_dataset(data_path)?;
    let mut selection = run_selector(&data, spec)?;
    if let Some(team) = team {
        selection.submission.team = team.to_string();
    }
    write_file(out, &submission_to_json(&selection.submission))?;
    if let Some(table) = &selection.pvalues {
        write_file(&pvalues_path(out), &pvalues_to_csv(table))?;
    }
    Ok(selection)
}

pub fn cmd_verify_truth(truth_path: &Path, digest: &str) -> Result<()> {
    let sealed = read_truth(truth_path)?;
    if verify(&sealed, digest) {
        Ok(())
    } else {
        Err(CliError::CommitmentMismatch {
            path: truth_path.to_path_buf(),
            expected: digest.trim().to_string(),
        })
    }
}

/// Scores every submission against the revealed truth and returns the ranked
/// leaderboard. With a digest, refuses to score a truth that fails verification.
pub fn cmd_score(
    truth_path: &Path,
    submissions: &[PathBuf],
    rule: &ScoringRule,
    digest: Option<&str>,
    out: Option<&Path>,
) -> Result<Vec<ScoreReport>> {
    if submissions.is_empty() {
        return Err(CliError::Usage("no submissions to score".into()));
    }
    if let Some(digest) = digest {
        cmd_verify_truth(truth_path, digest)?;
    }
    let truth = read_truth(truth_path)?.truth;
    let mut reports = Vec::with_capacity(submissions.len());
    for path in submissions {
        let sub = read_submission(path)?;
        if reports.iter().any(|r: &ScoreReport| r.team == sub.team) {
            return Err(CliError::parse(
                path,
                format!("team '{}' submitted twice", sub.team),
            ));
        }
        let report = match rule {
            ScoringRule::Points(w) => contest_score(&sub, &truth, w),
            ScoringRule::Youden => youden_report(&sub, &truth),
        }
        .map_err(|e| CliError::parse(path, e.to_string()))?;
        reports.push(report);
    }
    let ranked = rank_leaderboard(reports);
    if let Some(out) = out {
        write_file(out, &reports_to_csv(&ranked))?;
    }
    Ok(ranked)
}

/// Runs the tournament and writes `replicates.csv` and `leaderboard.csv` into
/// `out_dir`; a single replicate writes `replicate_<r>.csv` instead.
pub fn cmd_tournament(
    config: &TournamentConfig,
    out_dir: &Path,
    only: Option<usize>,
) -> Result<TournamentOutcome> {
    if let Some(r) = only {
        if r == 0 || r > config.replicates {
            return Err(CliError::Usage(format!(
                "replicate must lie in 1..={}, got {r}",
                config.replicates
            )));
        }
    }
    let outcome = run_tournament(config, only);
    match only {
        Some(r) => write_file(
            &out_dir.join(format!("replicate_{r}.csv")),
            &rows_to_csv(&outcome.rows),
        )?,
        None => {
            write_file(&out_dir.join(REPLICATES_FILE), &rows_to_csv(&outcome.rows))?;
            write_file(
                &out_dir.join(LEADERBOARD_FILE),
                &summary_to_csv(&outcome.summary),
            )?;
        }
    }
    Ok(outcome)
}
