//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use contest_cli::commands::{
    cmd_score, cmd_simulate, cmd_tournament, LEADERBOARD_FILE, REPLICATES_FILE,
};
use contest_cli::commitment::seal;
use contest_cli::config::{ScoringRule, TournamentConfig};
use contest_cli::formats::{submission_to_json, truth_to_json, write_file};
use contest_core::glm::{
    fit_lasso_path, fit_logistic, lambda_grid, lambda_max, log_likelihood, score_vector,
    wald_pvalues, BinaryMatrix, GroupedData,
};
use contest_core::selectors::select_team_c_detailed;
use contest_core::sim::{prevalence_grid, simulate_dataset};
use contest_core::{
    Confusion, Dataset, GroundTruth, Method, PenaltySpec, ScoringWeights, SelectorSpec,
    SimulationConfig, Submission,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn truth_with(effects: &[(usize, f64)]) -> GroundTruth {
    GroundTruth {
        effects: effects.iter().copied().collect::<BTreeMap<_, _>>(),
        confounders: vec![],
        prevalences: prevalence_grid(20, 0.03, 0.001).unwrap(),
    }
}

fn classroom_truth() -> GroundTruth {
    truth_with(&[
        (3, -0.9),
        (6, -0.72),
        (10, 0.53),
        (12, -1.26),
        (14, -0.64),
        (16, -0.8),
        (20, -1.13),
    ])
}

const CLASSROOM_TEAMS: [(&str, &[usize]); 4] = [
    ("A", &[3, 6, 8, 16, 17, 20]),
    ("B", &[3, 6, 8]),
    ("C", &[3, 5, 6, 12, 16, 17]),
    ("D", &[3, 5, 6, 12, 17]),
];

fn classroom_scores() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let truth_path = dir.path().join("truth.json");
    write_file(&truth_path, &truth_to_json(&seal(classroom_truth(), 0)))
        .map_err(|e| e.to_string())?;
    let mut paths = Vec::new();
    for (i, (team, selected)) in CLASSROOM_TEAMS.iter().enumerate() {
        // Half JSON, half plain text.
        let path = if i % 2 == 0 {
            let p = dir.path().join(format!("{team}.json"));
            write_file(
                &p,
                &submission_to_json(&Submission::new(*team, selected.to_vec())),
            )
            .unwrap();
            p
        } else {
            let p = dir.path().join(format!("{team}.txt"));
            let text: Vec<String> = selected.iter().map(usize::to_string).collect();
            write_file(&p, &text.join(" ")).unwrap();
            p
        };
        paths.push(path);
    }
    let rule = ScoringRule::Points(ScoringWeights::TABLE1);
    let reports = cmd_score(&truth_path, &paths, &rule, None, None).map_err(|e| e.to_string())?;
    let expected = BTreeMap::from([
        ("A", (44.0, 57, 85)),
        ("B", (31.0, 29, 92)),
        ("C", (44.0, 57, 85)),
        ("D", (31.0, 43, 85)),
    ]);
    for r in &reports {
        let want = expected[r.team.as_str()];
        let got = (r.score, r.tpr_percent().unwrap(), r.tnr_percent().unwrap());
        ensure(got == want, || {
            format!("team {}: got {got:?}, want {want:?}", r.team)
        })?;
    }
    let order: Vec<&str> = reports.iter().map(|r| r.team.as_str()).collect();
    ensure(order == ["A", "C", "B", "D"], || {
        format!("leaderboard order {order:?}")
    })?;
    Ok("scores 44/31/44/31, percentages 57/85 29/92 57/85 43/85".into())
}

fn prevalence_grid_rounding() -> Outcome {
    let table = [
        3.0, 2.5, 2.1, 1.8, 1.5, 1.2, 1.0, 0.9, 0.7, 0.6, 0.5, 0.4, 0.4, 0.3, 0.2, 0.2, 0.2, 0.1,
        0.1, 0.1,
    ];
    let grid = prevalence_grid(20, 0.03, 0.001).map_err(|e| e.to_string())?;
    let rounded: Vec<f64> = grid.iter().map(|p| (p * 1000.0).round() / 10.0).collect();
    ensure(rounded == table, || format!("rounded grid {rounded:?}"))?;
    Ok("20 entries match after rounding to 0.1%".into())
}

fn scoring_rule_uniqueness() -> Outcome {
    let truth = classroom_truth();
    let confusions: Vec<(Confusion, f64)> = CLASSROOM_TEAMS
        .iter()
        .zip([44.0, 31.0, 44.0, 31.0])
        .map(|((team, sel), score)| {
            let sub = Submission::new(*team, sel.to_vec());
            (
                contest_core::scoring::confusion_counts(&sub, &truth, 20).unwrap(),
                score,
            )
        })
        .collect();
    let mut solutions = Vec::new();
    for w_tp in -20i32..=20 {
        for w_tn in -20i32..=20 {
            let w = ScoringWeights {
                w_tp: w_tp as f64,
                w_fp: -w_tp as f64,
                w_tn: w_tn as f64,
                w_fn: -w_tn as f64,
            };
            if confusions.iter().all(|(c, s)| c.points(&w) == *s) {
                solutions.push((w_tp, -w_tp, w_tn, -w_tn));
            }
        }
    }
    ensure(solutions == [(10, -10, 3, -3)], || {
        format!("solutions {solutions:?}")
    })?;
    Ok("(+10, -10, +3, -3) is the unique symmetric solution".into())
}

fn two_by_two(cells: [usize; 4]) -> (BinaryMatrix, Vec<u8>) {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (count, x, outcome) in cells
        .into_iter()
        .zip([(1, 1), (1, 0), (0, 1), (0, 0)])
        .map(|(c, (x, o))| (c, x, o))
    {
        rows.extend(std::iter::repeat_n(vec![x], count));
        y.extend(std::iter::repeat_n(outcome, count));
    }
    (BinaryMatrix::from_rows(&rows).unwrap(), y)
}

fn glm_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let cells: [usize; 4] = std::array::from_fn(|_| rng.random_range(5..=300));
        let (x, y) = two_by_two(cells);
        let fit = fit_logistic(&x, &y, &PenaltySpec::NONE).map_err(|e| e.to_string())?;
        let oracle = ((cells[0] * cells[3]) as f64 / (cells[1] * cells[2]) as f64).ln();
        worst = worst.max((fit.slopes()[0] - oracle).abs());
    }
    ensure(worst < 1e-8, || format!("max error {worst:e}"))?;
    Ok(format!("max |error| {worst:.1e} over 100 tables"))
}

fn simulate(truth: &GroundTruth, seed: u64) -> Dataset {
    simulate_dataset(
        truth,
        &SimulationConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
    .unwrap()
}

fn gradient_and_kkt() -> Outcome {
    let data = simulate(&classroom_truth(), 5);
    let grouped = GroupedData::from_xy(&data.x, &data.y).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-5;
    let mut worst_grad = 0.0f64;
    for _ in 0..20 {
        let coef: Vec<f64> = (0..21).map(|_| rng.random_range(-1.0..1.0)).collect();
        let analytic = score_vector(&grouped, &coef);
        let mut err = 0.0;
        let mut norm = 0.0;
        for i in 0..21 {
            let (mut up, mut down) = (coef.clone(), coef.clone());
            up[i] += h;
            down[i] -= h;
            let numeric =
                (log_likelihood(&grouped, &up) - log_likelihood(&grouped, &down)) / (2.0 * h);
            err += (analytic[i] - numeric).powi(2);
            norm += analytic[i].powi(2);
        }
        worst_grad = worst_grad.max((err / norm).sqrt());
    }
    ensure(worst_grad < 1e-5, || {
        format!("gradient relative error {worst_grad:e}")
    })?;

    let grid = lambda_grid(lambda_max(&grouped).map_err(|e| e.to_string())?, 50, 1000.0);
    let path = fit_lasso_path(&data.x, &data.y, &grid).map_err(|e| e.to_string())?;
    let n = data.n() as f64;
    let stats: Vec<(f64, f64)> = (0..20)
        .map(|j| {
            let m = data.x.column_sum(j) as f64 / n;
            (m, (m * (1.0 - m)).sqrt())
        })
        .collect();
    let mut worst_kkt = 0.0f64;
    for (fit, &lambda) in path.iter().zip(&grid) {
        let b = &fit.coefficients;
        let resid: Vec<f64> = (0..data.n())
            .map(|i| {
                let eta = b[0]
                    + (0..20)
                        .map(|j| b[j + 1] * data.x.get(i, j) as f64)
                        .sum::<f64>();
                data.y[i] as f64 - 1.0 / (1.0 + (-eta).exp())
            })
            .collect();
        for (j, &(mean, sd)) in stats.iter().enumerate() {
            if sd == 0.0 {
                continue;
            }
            let g = (0..data.n())
                .map(|i| (data.x.get(i, j) as f64 - mean) / sd * resid[i])
                .sum::<f64>()
                / n;
            let violation = if b[j + 1] != 0.0 {
                (g - lambda * b[j + 1].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            };
            worst_kkt = worst_kkt.max(violation);
        }
    }
    ensure(worst_kkt <= 1e-6, || format!("KKT violation {worst_kkt:e}"))?;
    Ok(format!(
        "gradient error {worst_grad:.1e}, KKT violation {worst_kkt:.1e} over {} penalties",
        grid.len()
    ))
}

fn odds_ratio_recovery() -> Outcome {
    let truth = truth_with(&[(3, -0.9)]);
    let prevalence = truth.prevalences[2];
    ensure((prevalence * 1000.0).round() == 21.0, || {
        format!("prevalence {prevalence}")
    })?;
    let mut total = 0.0;
    for seed in 0..200 {
        let data = simulate(&truth, 1000 + seed);
        let fit = fit_logistic(&data.x.select_columns(&[2]), &data.y, &PenaltySpec::NONE)
            .map_err(|e| e.to_string())?;
        total += fit.slopes()[0];
    }
    let mean = total / 200.0;
    ensure((mean + 0.9).abs() <= 0.1, || {
        format!("mean log OR {mean:.4}")
    })?;
    Ok(format!("mean log OR {mean:.4} over 200 datasets"))
}

fn null_pvalues_uniform() -> Outcome {
    // Pooled over the five most common variables, fitted jointly; rarer columns
    // have too few exposures for the normal approximation to hold.
    let truth = truth_with(&[]);
    let cols = [0, 1, 2, 3, 4];
    let mut pvalues = Vec::new();
    for seed in 0..200 {
        let data = simulate(&truth, 5000 + seed);
        let fit = fit_logistic(&data.x.select_columns(&cols), &data.y, &PenaltySpec::NONE)
            .map_err(|e| e.to_string())?;
        let p = wald_pvalues(&fit).map_err(|e| e.to_string())?;
        pvalues.extend(p);
    }
    pvalues.sort_unstable_by(f64::total_cmp);
    let n = pvalues.len() as f64;
    let ks = pvalues
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let critical = 1.6276 / n.sqrt();
    ensure(ks < critical, || format!("KS {ks:.4} >= {critical:.4}"))?;
    Ok(format!(
        "KS {ks:.4} < {critical:.4} on {} p-values",
        pvalues.len()
    ))
}

fn enumeration_count() -> Outcome {
    let data = simulate(&classroom_truth(), 8);
    let start = Instant::now();
    let selection = select_team_c_detailed(&data, &SelectorSpec::new(Method::TeamC, 8))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let visited = selection.subsets_evaluated.unwrap_or(0);
    ensure(visited == 137_769, || format!("visited {visited} subsets"))?;
    ensure(elapsed < Duration::from_secs(600), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("137769 subsets in {:.1} s", elapsed.as_secs_f64()))
}

fn reduced_tournament(replicates: usize, master_seed: u64) -> TournamentConfig {
    let mut config = TournamentConfig {
        replicates,
        master_seed,
        ..TournamentConfig::default()
    };
    for entry in &mut config.methods {
        if entry.method == Method::TeamC {
            entry.params.max_size = 4;
        }
    }
    config
}

fn tournament_sanity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = reduced_tournament(100, 2024);
    let outcome = cmd_tournament(&config, dir.path(), None).map_err(|e| e.to_string())?;
    let mean = |m: Method| {
        outcome
            .summary
            .iter()
            .find(|s| s.method == m)
            .and_then(|s| s.mean_score)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let failed: usize = outcome.summary.iter().map(|s| s.n_failed).sum();
    ensure(failed == 0, || format!("{failed} failed runs"))?;
    let (c, random, full) = (
        mean(Method::TeamC),
        mean(Method::RandomBaseline),
        mean(Method::FullBaseline),
    );
    ensure(c > random, || {
        format!("team_c {c:.2} <= random_baseline {random:.2}")
    })?;
    for m in Method::ALL
        .into_iter()
        .filter(|&m| m != Method::FullBaseline)
    {
        ensure(mean(m) > full, || {
            format!("{m} {:.2} <= full_baseline {full:.2}", mean(m))
        })?;
    }
    Ok(format!(
        "team_c {c:.2} > random {random:.2}; all beat full_baseline {full:.2}"
    ))
}

fn same_bytes(a: &Path, b: &Path) -> Result<(), String> {
    let (x, y) = (
        fs::read(a).map_err(|e| e.to_string())?,
        fs::read(b).map_err(|e| e.to_string())?,
    );
    ensure(x == y, || format!("{} differs between runs", a.display()))
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let sim = SimulationConfig {
        seed: 31,
        ..SimulationConfig::default()
    };
    let tournament = reduced_tournament(2, 31);
    for dir in &dirs {
        cmd_simulate(&sim, &dir.path().join("sim"), true).map_err(|e| e.to_string())?;
        cmd_tournament(&tournament, &dir.path().join("tournament"), None)
            .map_err(|e| e.to_string())?;
    }
    let files = [
        "sim/dataset.csv",
        "sim/truth.json",
        "sim/commitment.txt",
        "sim/latent.csv",
    ]
    .into_iter()
    .map(String::from)
    .chain([REPLICATES_FILE, LEADERBOARD_FILE].map(|f| format!("tournament/{f}")));
    let mut count = 0;
    for file in files {
        same_bytes(&dirs[0].path().join(&file), &dirs[1].path().join(&file))?;
        count += 1;
    }
    Ok(format!("{count} output files byte-identical across runs"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("classroom score reproduction", classroom_scores),
        ("prevalence grid", prevalence_grid_rounding),
        ("scoring-rule uniqueness", scoring_rule_uniqueness),
        ("GLM 2x2 oracle", glm_oracle),
        ("gradient and KKT checks", gradient_and_kkt),
        ("odds-ratio recovery", odds_ratio_recovery),
        ("null p-value uniformity", null_pvalues_uniform),
        ("enumeration count", enumeration_count),
        ("tournament sanity", tournament_sanity),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} ({secs:.1} s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {:>2} {name}: {detail} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
