//! Replicated contests: every replicate draws a fresh truth and dataset, runs
//! each method, and scores it; the summary averages over replicates.

use std::fmt::Write as _;

use contest_core::scoring::{contest_score, rank_leaderboard, youden_report};
use contest_core::selectors::run_selector;
use contest_core::sim::{draw_ground_truth, simulate_dataset};
use contest_core::{Error, Method, ScoreReport, SelectorSpec};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ScoringRule, TournamentConfig};

/// Seeds of replicate `r` (1-based): one for the simulation and one per
/// method, keyed by the method's position in [`Method::ALL`] so that adding or
/// removing methods leaves the others' seeds unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplicateSeeds {
    pub simulation: u64,
    pub methods: [u64; Method::ALL.len()],
}

impl ReplicateSeeds {
    pub fn derive(master_seed: u64, replicate: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(replicate as u64);
        let simulation = rng.next_u64();
        let mut methods = [0; Method::ALL.len()];
        for seed in &mut methods {
            *seed = rng.next_u64();
        }
        Self {
            simulation,
            methods,
        }
    }

    pub fn method(&self, method: Method) -> u64 {
        let slot = Method::ALL
            .iter()
            .position(|&m| m == method)
            .expect("method is listed");
        self.methods[slot]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Scored(ScoreReport),
    /// Short machine-readable failure tag.
    Failed(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    /// Size of the hidden truth, when the simulation succeeded.
    pub k: Option<usize>,
    pub outcome: Outcome,
}

pub fn failure_tag(err: &Error) -> &'static str {
    match err {
        Error::Config(_) => "config",
        Error::Validation(_) => "validation",
        Error::SimulationBudget { .. } => "simulation_budget",
        Error::DegenerateOutcome { .. } => "degenerate_outcome",
        Error::UnsupportedFit(_) => "unsupported_fit",
        Error::Stratification(_) => "stratification",
        Error::EnumerationBudget { .. } => "enumeration_budget",
        Error::UndefinedRate(_) => "undefined_rate",
        Error::Singular => "singular",
    }
}

pub fn run_replicate(config: &TournamentConfig, replicate: usize) -> Vec<ReplicateRow> {
    let seeds = ReplicateSeeds::derive(config.master_seed, replicate);
    let mut sim_config = config.simulation.clone();
    sim_config.seed = seeds.simulation;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds.simulation);
    let simulated = draw_ground_truth(&sim_config, &mut rng).and_then(|truth| {
        simulate_dataset(&truth, &sim_config, &mut rng).map(|data| (truth, data))
    });
    config
        .methods
        .iter()
        .map(|entry| {
            let row = |k, outcome| ReplicateRow {
                replicate,
                seed: seeds.simulation,
                method: entry.method,
                k,
                outcome,
            };
            let (truth, data) = match &simulated {
                Ok(pair) => pair,
                Err(e) => return row(None, Outcome::Failed(failure_tag(e))),
            };
            let spec = SelectorSpec {
                method: entry.method,
                params: entry.params.clone(),
                seed: seeds.method(entry.method),
            };
            let scored = run_selector(data, &spec).and_then(|selection| {
                let mut sub = selection.submission;
                sub.team = entry.method.name().to_string();
                match &config.rule {
                    ScoringRule::Points(w) => contest_score(&sub, truth, w),
                    ScoringRule::Youden => youden_report(&sub, truth),
                }
            });
            let outcome = match scored {
                Ok(report) => Outcome::Scored(report),
                Err(e) => Outcome::Failed(failure_tag(&e)),
            };
            row(Some(truth.k()), outcome)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean_score: Option<f64>,
    pub mean_tp: Option<f64>,
    pub mean_fp: Option<f64>,
    /// Replicates in which this method topped the leaderboard.
    pub wins: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TournamentOutcome {
    pub rows: Vec<ReplicateRow>,
    pub summary: Vec<MethodSummary>,
}

/// Runs replicates `1..=R`, or only `only` when given.
pub fn run_tournament(config: &TournamentConfig, only: Option<usize>) -> TournamentOutcome {
    let replicates: Vec<usize> = match only {
        Some(r) => vec![r],
        None => (1..=config.replicates).collect(),
    };
    let rows: Vec<ReplicateRow> = replicates
        .iter()
        .flat_map(|&r| run_replicate(config, r))
        .collect();
    let summary = summarize(config, &rows);
    TournamentOutcome { rows, summary }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn summarize(config: &TournamentConfig, rows: &[ReplicateRow]) -> Vec<MethodSummary> {
    let mut winners: Vec<String> = Vec::new();
    let mut replicate_ids: Vec<usize> = rows.iter().map(|r| r.replicate).collect();
    replicate_ids.dedup();
    for id in replicate_ids {
        let reports: Vec<ScoreReport> = rows
            .iter()
            .filter(|r| r.replicate == id)
            .filter_map(|r| match &r.outcome {
                Outcome::Scored(report) => Some(report.clone()),
                Outcome::Failed(_) => None,
            })
            .collect();
        if let Some(top) = rank_leaderboard(reports).into_iter().next() {
            winners.push(top.team);
        }
    }
    let mut summary: Vec<MethodSummary> = config
        .methods
        .iter()
        .map(|entry| {
            let reports: Vec<&ScoreReport> = rows
                .iter()
                .filter(|r| r.method == entry.method)
                .filter_map(|r| match &r.outcome {
                    Outcome::Scored(report) => Some(report),
                    Outcome::Failed(_) => None,
                })
                .collect();
            let total = rows.iter().filter(|r| r.method == entry.method).count();
            let collect = |f: fn(&ScoreReport) -> f64| {
                mean(&reports.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            MethodSummary {
                method: entry.method,
                n_ok: reports.len(),
                n_failed: total - reports.len(),
                mean_score: collect(|r| r.score),
                mean_tp: collect(|r| r.tp as f64),
                mean_fp: collect(|r| r.fp as f64),
                wins: winners.iter().filter(|w| *w == entry.method.name()).count(),
            }
        })
        .collect();
    summary.sort_by(|a, b| {
        let key = |s: &MethodSummary| s.mean_score.unwrap_or(f64::NEG_INFINITY);
        key(b)
            .total_cmp(&key(a))
            .then_with(|| a.method.name().cmp(b.method.name()))
    });
    summary
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v:.4}"))
}

pub fn rows_to_csv(rows: &[ReplicateRow]) -> String {
    let mut out = String::from("replicate,seed,method,k,tp,fp,tn,fn,score,status\n");
    for row in rows {
        let k = row.k.map_or_else(String::new, |k| k.to_string());
        let _ = match &row.outcome {
            Outcome::Scored(r) => writeln!(
                out,
                "{},{},{},{k},{},{},{},{},{},ok",
                row.replicate, row.seed, row.method, r.tp, r.fp, r.tn, r.fn_, r.score
            ),
            Outcome::Failed(tag) => writeln!(
                out,
                "{},{},{},{k},,,,,,failed:{tag}",
                row.replicate, row.seed, row.method
            ),
        };
    }
    out
}

pub fn summary_to_csv(summary: &[MethodSummary]) -> String {
    let mut out = String::from("rank,method,n_ok,n_failed,mean_score,mean_tp,mean_fp,wins\n");
    for (i, s) in summary.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            s.method,
            s.n_ok,
            s.n_failed,
            cell(s.mean_score),
            cell(s.mean_tp),
            cell(s.mean_fp),
            s.wins
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MethodEntry;
    use contest_core::SelectorParams;

    fn small(methods: &[Method], replicates: usize) -> TournamentConfig {
        let mut config = TournamentConfig {
            replicates,
            master_seed: 5,
            ..TournamentConfig::default()
        };
        config.simulation.n_cases = 300;
        config.simulation.n_controls = 300;
        config.methods = methods
            .iter()
            .map(|&method| MethodEntry {
                method,
                params: SelectorParams::default(),
            })
            .collect();
        config
    }

    #[test]
    fn seeds_are_a_function_of_master_and_replicate() {
        assert_eq!(ReplicateSeeds::derive(1, 3), ReplicateSeeds::derive(1, 3));
        assert_ne!(
            ReplicateSeeds::derive(1, 3).simulation,
            ReplicateSeeds::derive(1, 4).simulation
        );
        assert_ne!(
            ReplicateSeeds::derive(1, 3).simulation,
            ReplicateSeeds::derive(2, 3).simulation
        );
    }

    #[test]
    fn single_replicate_rerun_matches_full_run() {
        let config = small(&[Method::TeamA, Method::EmptyBaseline], 3);
        let full = run_tournament(&config, None);
        let only = run_tournament(&config, Some(2));
        let from_full: Vec<_> = full
            .rows
            .iter()
            .filter(|r| r.replicate == 2)
            .cloned()
            .collect();
        assert_eq!(only.rows, from_full);
    }

    #[test]
    fn failures_are_tagged_not_fatal() {
        let mut config = small(&[Method::EmptyBaseline, Method::FullBaseline], 2);
        config.simulation.draw_budget_factor = 1;
        config.simulation.baseline_intercept = -12.0;
        let outcome = run_tournament(&config, None);
        assert!(outcome
            .rows
            .iter()
            .all(|r| r.outcome == Outcome::Failed("simulation_budget")));
        assert!(outcome
            .summary
            .iter()
            .all(|s| s.n_failed == 2 && s.mean_score.is_none()));
        assert!(rows_to_csv(&outcome.rows).contains("failed:simulation_budget"));
    }

    #[test]
    fn wins_add_up_to_replicates() {
        let config = small(
            &[Method::TeamA, Method::EmptyBaseline, Method::FullBaseline],
            3,
        );
        let outcome = run_tournament(&config, None);
        assert_eq!(outcome.summary.iter().map(|s| s.wins).sum::<usize>(), 3);
    }
}
