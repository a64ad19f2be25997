//! Automated versions of the four contest strategies plus control baselines.
//!
//! * `team_a`: stratified 75/25 holdout, greedy forward selection on the
//!   training part for sizes 3..=7, pick the size with the lowest test deviance.
//! * `team_b`: cross-validated lasso path, one-standard-error rule, at most
//!   `max_select` variables; a ridge grid and raw exposure counts are kept as
//!   evidence in the report.
//! * `team_c`: exhaustive enumeration of all subsets of sizes 3..=7 scored by
//!   4-fold cross-validated deviance on shared folds.
//! * `team_d`: Wald p-values of the full model over bootstrap resamples;
//!   variables whose median p-value falls below a threshold.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{
    bootstrap_resample, deviance, fit_grouped, fit_lasso_path_grouped, lambda_grid, lambda_max,
    make_folds, wald_pvalues, CvData, FitOptions, GroupedData, PenaltySpec,
};
use crate::sim::Dataset;

/// A named set of selected variables (1-based, ascending, unique).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub team: String,
    pub selected: Vec<usize>,
    #[serde(default)]
    pub method_report: String,
}

impl Submission {
    pub fn new(team: impl Into<String>, mut selected: Vec<usize>) -> Self {
        selected.sort_unstable();
        selected.dedup();
        Self {
            team: team.into(),
            selected,
            method_report: String::new(),
        }
    }

    pub fn with_report(mut self, report: String) -> Self {
        self.method_report = report;
        self
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if let Some(&j) = self.selected.iter().find(|&&j| j == 0 || j > d) {
            return Err(Error::Validation(format!(
                "submission '{}' selects variable {j}, valid range is 1..={d}",
                self.team
            )));
        }
        if self.selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "submission '{}' has duplicate or unsorted indices",
                self.team
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TeamA,
    TeamB,
    TeamC,
    TeamD,
    RandomBaseline,
    FullBaseline,
    EmptyBaseline,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::TeamA,
        Method::TeamB,
        Method::TeamC,
        Method::TeamD,
        Method::RandomBaseline,
        Method::FullBaseline,
        Method::EmptyBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::TeamA => "team_a",
            Method::TeamB => "team_b",
            Method::TeamC => "team_c",
            Method::TeamD => "team_d",
            Method::RandomBaseline => "random_baseline",
            Method::FullBaseline => "full_baseline",
            Method::EmptyBaseline => "empty_baseline",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Validation(format!(
                    "unknown method '{s}', expected one of {}",
                    known.join(", ")
                ))
            })
    }
}

/// Tuning knobs of every method; each method reads only its own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectorParams {
    /// Candidate model sizes for team_a, team_c and random_baseline.
    pub min_size: usize,
    pub max_size: usize,
    /// Share of rows held out by team_a.
    pub holdout_fraction: f64,
    pub lasso_points: usize,
    /// Ratio between the largest and smallest lasso penalty.
    pub lasso_ratio: f64,
    pub ridge_points: usize,
    pub ridge_max: f64,
    pub ridge_min: f64,
    pub lasso_folds: usize,
    pub max_select: usize,
    pub cv_folds: usize,
    /// Largest number of subsets team_c may enumerate.
    pub budget: u64,
    pub n_resamples: usize,
    pub threshold: f64,
    pub max_keep: usize,
}

impl Default for SelectorParams {
    fn default() -> Self {
        Self {
            min_size: 3,
            max_size: 7,
            holdout_fraction: 0.25,
            lasso_points: 50,
            lasso_ratio: 1000.0,
            ridge_points: 20,
            ridge_max: 1e3,
            ridge_min: 1e-2,
            lasso_folds: 10,
            max_select: 3,
            cv_folds: 4,
            budget: 1_000_000,
            n_resamples: 100,
            threshold: 0.05,
            max_keep: 7,
        }
    }
}

impl SelectorParams {
    pub fn validate(&self, method: Method) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(format!("{method}: {msg}")));
        match method {
            Method::TeamA | Method::TeamC | Method::RandomBaseline
                if self.min_size < 1 || self.min_size > self.max_size =>
            {
                fail("need 1 <= min_size <= max_size")
            }
            Method::TeamA if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) => {
                fail("holdout_fraction must lie in (0, 1)")
            }
            Method::TeamB
                if self.lasso_points < 1
                    || self.lasso_ratio.is_nan()
                    || self.lasso_ratio <= 1.0
                    || self.lasso_folds < 2
                    || self.ridge_points < 1
                    || !(0.0 < self.ridge_min && self.ridge_min <= self.ridge_max) =>
            {
                fail("need lasso_points >= 1, lasso_ratio > 1, lasso_folds >= 2 and a positive ridge range")
            }
            Method::TeamC if self.cv_folds < 2 => fail("cv_folds must be at least 2"),
            Method::TeamD
                if self.n_resamples < 1 || !(0.0..=1.0).contains(&self.threshold) || self.max_keep < 1 =>
            {
                fail("need n_resamples >= 1, threshold in [0, 1] and max_keep >= 1")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorSpec {
    pub method: Method,
    pub params: SelectorParams,
    pub seed: u64,
}

impl SelectorSpec {
    pub fn new(method: Method, seed: u64) -> Self {
        Self {
            method,
            params: SelectorParams::default(),
            seed,
        }
    }
}

/// Bootstrap p-values, `values[variable][resample]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PValueTable {
    pub values: Vec<Vec<f64>>,
}

impl PValueTable {
    pub fn medians(&self) -> Vec<f64> {
        self.values.iter().map(|v| median(v)).collect()
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub submission: Submission,
    /// Subsets scored by an exhaustive search.
    pub subsets_evaluated: Option<u64>,
    pub pvalues: Option<PValueTable>,
}

impl Selection {
    fn plain(submission: Submission) -> Self {
        Self {
            submission,
            subsets_evaluated: None,
            pvalues: None,
        }
    }
}

pub fn run_selector(data: &Dataset, spec: &SelectorSpec) -> Result<Selection> {
    spec.params.validate(spec.method)?;
    match spec.method {
        Method::TeamA => select_team_a(data, spec).map(Selection::plain),
        Method::TeamB => select_team_b(data, spec).map(Selection::plain),
        Method::TeamC => select_team_c_detailed(data, spec),
        Method::TeamD => select_team_d_detailed(data, spec),
        _ => select_baseline(data, spec).map(Selection::plain),
    }
}

fn one_based(cols: &[usize]) -> Vec<usize> {
    cols.iter().map(|j| j + 1).collect()
}

fn format_set(cols: &[usize]) -> String {
    let items: Vec<String> = cols.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

/// Stratified split into (train, test) row lists.
fn holdout_split(y: &[u8], fraction: f64, rng: &mut impl Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [1u8, 0] {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        rows.shuffle(rng);
        let n_test = (rows.len() as f64 * fraction).round() as usize;
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

pub fn select_team_a(data: &Dataset, spec: &SelectorSpec) -> Result<Submission> {
    let params = &spec.params;
    params.validate(Method::TeamA)?;
    let d = data.d();
    if params.max_size > d {
        return Err(Error::Config(format!(
            "team_a: max_size {} exceeds d = {d}",
            params.max_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (train_rows, test_rows) = holdout_split(&data.y, params.holdout_fraction, &mut rng);
    let train = GroupedData::from_rows(&data.x, &data.y, train_rows.iter().copied())?;
    let test = GroupedData::from_rows(&data.x, &data.y, test_rows.iter().copied())?;
    test.require_two_classes()?;
    let opts = FitOptions::default();

    let mut report = format!(
        "team_a: stratified holdout, {} training rows, {} test rows\n",
        train_rows.len(),
        test_rows.len()
    );
    let mut current: Vec<usize> = Vec::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for size in 1..=params.max_size {
        let mut step: Option<(f64, usize)> = None;
        for j in (0..d).filter(|j| !current.contains(j)) {
            let mut cols = current.clone();
            cols.push(j);
            let fit = fit_grouped(&train.project(&cols), &PenaltySpec::NONE, &opts)?;
            if step.is_none_or(|(dev, _)| fit.deviance < dev) {
                step = Some((fit.deviance, j));
            }
        }
        let (train_dev, j) = step.expect("at least one candidate column remains");
        current.push(j);
        if size < params.min_size {
            continue;
        }
        let fit = fit_grouped(&train.project(&current), &PenaltySpec::NONE, &opts)?;
        let test_dev = deviance(&test.project(&current), &fit.coefficients);
        let mut sorted = one_based(&current);
        sorted.sort_unstable();
        let _ = writeln!(
            report,
            "size {size}: {} training deviance {train_dev:.4}, test deviance {test_dev:.4}",
            format_set(&sorted)
        );
        if best.as_ref().is_none_or(|(dev, _)| test_dev < *dev) {
            best = Some((test_dev, sorted));
        }
    }
    let (test_dev, selected) = best.expect("min_size <= max_size yields a candidate");
    let _ = writeln!(
        report,
        "chosen {} with test deviance {test_dev:.4}",
        format_set(&selected)
    );
    Ok(Submission::new(Method::TeamA.name(), selected).with_report(report))
}

pub fn select_team_b(data: &Dataset, spec: &SelectorSpec) -> Result<Submission> {
    let params = &spec.params;
    params.validate(Method::TeamB)?;
    let d = data.d();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let plan = make_folds(&data.y, params.lasso_folds, &mut rng)?;
    let cv = CvData::new(&data.x, &data.y, &plan)?;
    let full = GroupedData::from_xy(&data.x, &data.y)?;
    let grid = lambda_grid(lambda_max(&full)?, params.lasso_points, params.lasso_ratio);
    let n = data.n() as f64;

    // fold_dev[f][l]: held-out deviance of fold f at penalty l.
    let mut fold_dev = Vec::with_capacity(cv.n_folds());
    let mut fold_size = Vec::with_capacity(cv.n_folds());
    for f in 0..cv.n_folds() {
        let path = fit_lasso_path_grouped(cv.fold_train(f), &grid)?;
        let test = cv.fold_test(f);
        fold_dev.push(
            path.iter()
                .map(|fit| deviance(test, &fit.coefficients))
                .collect::<Vec<f64>>(),
        );
        fold_size.push(test.total_trials());
    }
    let k = cv.n_folds() as f64;
    let curve: Vec<(f64, f64)> = (0..grid.len())
        .map(|l| {
            let mean = fold_dev.iter().map(|f| f[l]).sum::<f64>() / n;
            let per_obs: Vec<f64> = (0..cv.n_folds())
                .map(|f| fold_dev[f][l] / fold_size[f])
                .collect();
            let m = per_obs.iter().sum::<f64>() / k;
            let var = per_obs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0);
            (mean, (var / k).sqrt())
        })
        .collect();
    let min_at = (0..grid.len())
        .min_by(|&a, &b| curve[a].0.total_cmp(&curve[b].0))
        .expect("non-empty lambda grid");
    let bound = curve[min_at].0 + curve[min_at].1;
    // Largest penalty (grid is decreasing) within one standard error of the minimum.
    let chosen = (0..=min_at)
        .find(|&l| curve[l].0 <= bound)
        .unwrap_or(min_at);

    let path = fit_lasso_path_grouped(&full, &grid[..=chosen])?;
    let fit = path.last().expect("path has the chosen penalty");
    let mut nonzero: Vec<(usize, f64)> = fit
        .slopes()
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, b)| (j + 1, *b))
        .collect();
    nonzero.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    let n_nonzero = nonzero.len();
    nonzero.truncate(params.max_select);
    let selected: Vec<usize> = nonzero.iter().map(|(j, _)| *j).collect();

    let mut report = format!(
        "team_b: lasso over {} penalties, {}-fold cross-validation\n",
        grid.len(),
        cv.n_folds()
    );
    report.push_str("lasso cv curve (lambda, mean deviance, se):\n");
    for (l, (mean, se)) in curve.iter().enumerate() {
        let mark = match l {
            _ if l == chosen => " <- one-se choice",
            _ if l == min_at => " <- minimum",
            _ => "",
        };
        let _ = writeln!(report, "  {:.6e} {mean:.6} {se:.6}{mark}", grid[l]);
    }
    let _ = writeln!(
        report,
        "{n_nonzero} nonzero slopes at lambda {:.6e}, keeping at most {}",
        grid[chosen], params.max_select
    );

    let ridge = lambda_grid(
        params.ridge_max,
        params.ridge_points,
        params.ridge_max / params.ridge_min,
    );
    let all: Vec<usize> = (0..d).collect();
    report.push_str("ridge cv curve (lambda, mean deviance):\n");
    let mut ridge_best: Option<(f64, f64)> = None;
    for &lambda in &ridge {
        let dev = cv.deviance(&all, &PenaltySpec::ridge(lambda))?;
        let _ = writeln!(report, "  {lambda:.6e} {dev:.6}");
        if ridge_best.is_none_or(|(_, best)| dev < best) {
            ridge_best = Some((lambda, dev));
        }
    }
    if let Some((lambda, _)) = ridge_best {
        let fit = fit_grouped(&full, &PenaltySpec::ridge(lambda), &FitOptions::default())?;
        let mut ranked: Vec<(usize, f64)> = fit
            .slopes()
            .iter()
            .enumerate()
            .map(|(j, b)| (j + 1, *b))
            .collect();
        ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        let top: Vec<String> = ranked
            .iter()
            .take(7)
            .map(|(j, b)| format!("x{j} {b:+.3}"))
            .collect();
        let _ = writeln!(
            report,
            "ridge best lambda {lambda:.6e}, largest slopes: {}",
            top.join(", ")
        );
    }

    report.push_str("exposed cases vs exposed controls:\n");
    for (j, (cases, controls)) in data.exposure_counts().into_iter().enumerate() {
        let _ = writeln!(report, "  x{} {cases} {controls}", j + 1);
    }
    let _ = writeln!(report, "chosen {}", format_set(&selected));
    Ok(Submission::new(Method::TeamB.name(), selected).with_report(report))
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of subsets of `d` variables with sizes in `min..=max`.
pub fn subset_count(d: usize, min: usize, max: usize) -> u128 {
    (min..=max.min(d))
        .map(|s| binomial(d as u64, s as u64))
        .sum()
}

/// Advances `comb` to the next combination of `0..n` in lexicographic order.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let Some(i) = (0..k).rev().find(|&i| comb[i] < n - k + i) else {
        return false;
    };
    comb[i] += 1;
    for j in i + 1..k {
        comb[j] = comb[j - 1] + 1;
    }
    true
}

/// Scores every subset of `0..d` with sizes `min..=max` and returns the
/// number scored with the best `(score, subset)`. Sizes ascend and subsets
/// of one size come in lexicographic order, so keeping only strict
/// improvements resolves ties towards the smaller, then lexicographically
/// first, subset.
pub fn search_subsets(
    d: usize,
    min: usize,
    max: usize,
    mut score: impl FnMut(&[usize]) -> Result<f64>,
) -> Result<(u64, (f64, Vec<usize>))> {
    let mut evaluated = 0u64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for size in min..=max.min(d) {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            let value = score(&comb)?;
            evaluated += 1;
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, comb.clone()));
            }
            if !next_combination(&mut comb, d) {
                break;
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::Config(format!(
            "no subsets of sizes {min}..={max} among {d} variables"
        ))
    })?;
    Ok((evaluated, best))
}

pub fn select_team_c(data: &Dataset, spec: &SelectorSpec) -> Result<Submission> {
    Ok(select_team_c_detailed(data, spec)?.submission)
}

pub fn select_team_c_detailed(data: &Dataset, spec: &SelectorSpec) -> Result<Selection> {
    let params = &spec.params;
    params.validate(Method::TeamC)?;
    let d = data.d();
    if params.min_size > d {
        return Err(Error::Config(format!(
            "team_c: min_size {} exceeds d = {d}",
            params.min_size
        )));
    }
    let needed = subset_count(d, params.min_size, params.max_size);
    if needed > params.budget as u128 {
        return Err(Error::EnumerationBudget {
            needed,
            budget: params.budget as u128,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let plan = make_folds(&data.y, params.cv_folds, &mut rng)?;
    let cv = CvData::new(&data.x, &data.y, &plan)?;

    let (evaluated, best) = search_subsets(d, params.min_size, params.max_size, |cols| {
        cv.deviance(cols, &PenaltySpec::NONE)
    })?;
    let (dev, cols) = best;
    let selected = one_based(&cols);
    let report = format!(
        "team_c: exhaustive search over {evaluated} subsets of sizes {}..={}, {}-fold cv\n\
         chosen {} with cv deviance {dev:.6}\n",
        params.min_size,
        params.max_size,
        params.cv_folds,
        format_set(&selected)
    );
    Ok(Selection {
        submission: Submission::new(Method::TeamC.name(), selected).with_report(report),
        subsets_evaluated: Some(evaluated),
        pvalues: None,
    })
}

pub fn select_team_d(data: &Dataset, spec: &SelectorSpec) -> Result<Submission> {
    Ok(select_team_d_detailed(data, spec)?.submission)
}

/// Bootstrap p-value table of the full model, `values[variable][resample]`.
pub fn bootstrap_pvalues(
    data: &Dataset,
    n_resamples: usize,
    rng: &mut impl Rng,
) -> Result<PValueTable> {
    let d = data.d();
    let opts = FitOptions::default();
    let mut values = vec![Vec::with_capacity(n_resamples); d];
    for _ in 0..n_resamples {
        let rows = bootstrap_resample(data.n(), rng);
        let grouped = GroupedData::from_rows(&data.x, &data.y, rows)?;
        let fit = fit_grouped(&grouped, &PenaltySpec::NONE, &opts)?;
        for (j, p) in wald_pvalues(&fit)?.into_iter().enumerate() {
            values[j].push(p);
        }
    }
    Ok(PValueTable { values })
}

pub fn select_team_d_detailed(data: &Dataset, spec: &SelectorSpec) -> Result<Selection> {
    let params = &spec.params;
    params.validate(Method::TeamD)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let table = bootstrap_pvalues(data, params.n_resamples, &mut rng)?;
    let medians = table.medians();
    let mut order: Vec<usize> = (0..medians.len()).collect();
    order.sort_by(|&a, &b| medians[a].total_cmp(&medians[b]).then(a.cmp(&b)));
    let selected: Vec<usize> = order
        .iter()
        .filter(|&&j| medians[j] < params.threshold)
        .take(params.max_keep)
        .map(|j| j + 1)
        .collect();

    let mut report = format!(
        "team_d: {} bootstrap resamples, select median p < {}\nmedian p-values, ascending:\n",
        params.n_resamples, params.threshold
    );
    for &j in &order {
        let _ = writeln!(report, "  x{} {:.6}", j + 1, medians[j]);
    }
    let _ = writeln!(
        report,
        "chosen {}",
        format_set(&{
            let mut s = selected.clone();
            s.sort_unstable();
            s
        })
    );
    Ok(Selection {
        submission: Submission::new(Method::TeamD.name(), selected).with_report(report),
        subsets_evaluated: None,
        pvalues: Some(table),
    })
}

pub fn select_baseline(data: &Dataset, spec: &SelectorSpec) -> Result<Submission> {
    let d = data.d();
    let method = spec.method;
    let selected = match method {
        Method::EmptyBaseline => Vec::new(),
        Method::FullBaseline => (1..=d).collect(),
        Method::RandomBaseline => {
            spec.params.validate(method)?;
            let max = spec.params.max_size.min(d);
            if spec.params.min_size > max {
                return Err(Error::Config(format!(
                    "random_baseline: min_size exceeds d = {d}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let size = rng.random_range(spec.params.min_size..=max);
            index::sample(&mut rng, d, size)
                .into_iter()
                .map(|j| j + 1)
                .collect()
        }
        other => {
            return Err(Error::Config(format!("{other} is not a baseline")));
        }
    };
    let report = format!("{method}: {} variables\n", selected.len());
    Ok(Submission::new(method.name(), selected).with_report(report))
}
