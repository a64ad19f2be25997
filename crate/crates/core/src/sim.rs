//! Hidden ground truths and retrospectively sampled case-control datasets.
//!
//! Risk factors are independent Bernoulli columns with prevalences on a
//! log-linear grid. A small number of latent confounders raise the prevalence
//! of two linked non-relevant factors each and also shift the outcome, so a
//! naive marginal analysis sees spurious associations.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{expit, BinaryMatrix, MAX_COLUMNS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub d: usize,
    pub n_cases: usize,
    pub n_controls: usize,
    pub prev_max: f64,
    pub prev_min: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub effect_lo: f64,
    pub effect_hi: f64,
    pub n_confounders: usize,
    pub confounder_prev: f64,
    /// Risk factors each confounder is linked to.
    pub confounder_links: usize,
    /// Prevalence multiplier of a linked factor while its confounder is active.
    pub confounder_boost: f64,
    pub confounder_boost_cap: f64,
    pub baseline_intercept: f64,
    /// Draw prevalences log-uniformly between the bounds instead of using the grid.
    pub jitter_prevalences: bool,
    /// Population draws allowed per requested record before giving up.
    pub draw_budget_factor: u64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            d: 20,
            n_cases: 2000,
            n_controls: 2000,
            prev_max: 0.03,
            prev_min: 0.001,
            k_min: 3,
            k_max: 7,
            effect_lo: 0.5,
            effect_hi: 1.5,
            n_confounders: 2,
            confounder_prev: 0.01,
            confounder_links: 2,
            confounder_boost: 10.0,
            confounder_boost_cap: 0.5,
            baseline_intercept: -3.0,
            jitter_prevalences: false,
            draw_budget_factor: 500,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.d < 2 || self.d > MAX_COLUMNS {
            return fail(format!("d must lie in 2..={MAX_COLUMNS}, got {}", self.d));
        }
        check_prevalence_bounds(self.prev_max, self.prev_min)?;
        if self.k_min < 1 || self.k_min > self.k_max || self.k_max > self.d {
            return fail(format!(
                "need 1 <= k_min <= k_max <= d, got {}..{} with d = {}",
                self.k_min, self.k_max, self.d
            ));
        }
        if !(self.effect_lo > 0.0 && self.effect_lo <= self.effect_hi && self.effect_hi.is_finite())
        {
            return fail(format!(
                "need 0 < effect_lo <= effect_hi, got {} and {}",
                self.effect_lo, self.effect_hi
            ));
        }
        if self.n_cases == 0 || self.n_controls == 0 {
            return fail("n_cases and n_controls must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.confounder_prev) {
            return fail(format!(
                "confounder_prev {} is not a probability",
                self.confounder_prev
            ));
        }
        if self.confounder_boost.is_nan()
            || self.confounder_boost < 1.0
            || !(0.0 < self.confounder_boost_cap && self.confounder_boost_cap <= 1.0)
        {
            return fail("confounder boost must be >= 1 with a cap in (0, 1]".into());
        }
        if !self.baseline_intercept.is_finite() {
            return fail("baseline_intercept must be finite".into());
        }
        if self.draw_budget_factor == 0 {
            return fail("draw_budget_factor must be positive".into());
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n_cases + self.n_controls
    }
}

fn check_prevalence_bounds(prev_max: f64, prev_min: f64) -> Result<()> {
    if !(0.0 < prev_min && prev_min < prev_max && prev_max < 1.0) {
        return Err(Error::Config(format!(
            "need 0 < prev_min < prev_max < 1, got prev_min = {prev_min}, prev_max = {prev_max}"
        )));
    }
    Ok(())
}

/// `d` prevalences from `prev_max` down to `prev_min`, equally spaced on the log scale.
pub fn prevalence_grid(d: usize, prev_max: f64, prev_min: f64) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::Config(format!(
            "prevalence grid needs d >= 2, got {d}"
        )));
    }
    check_prevalence_bounds(prev_max, prev_min)?;
    let step = (prev_min / prev_max).ln() / (d - 1) as f64;
    Ok((0..d)
        .map(|j| match j {
            0 => prev_max,
            j if j == d - 1 => prev_min,
            j => prev_max * (step * j as f64).exp(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Confounder {
    /// Log odds ratio on the outcome.
    pub log_or: f64,
    /// 1-based risk factors whose prevalence rises while the confounder is active.
    pub linked: Vec<usize>,
    pub prevalence: f64,
}

/// The answer key of one contest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Log odds ratio of every relevant variable, keyed by 1-based index.
    pub effects: BTreeMap<usize, f64>,
    pub confounders: Vec<Confounder>,
    /// One prevalence per variable, strictly decreasing.
    pub prevalences: Vec<f64>,
}

impl GroundTruth {
    /// Relevant variables, ascending.
    pub fn relevant(&self) -> Vec<usize> {
        self.effects.keys().copied().collect()
    }

    pub fn k(&self) -> usize {
        self.effects.len()
    }

    pub fn d(&self) -> usize {
        self.prevalences.len()
    }

    pub fn is_relevant(&self, index: usize) -> bool {
        self.effects.contains_key(&index)
    }

    /// Structural checks; `config` adds the range checks of the generator.
    pub fn validate(&self, config: Option<&SimulationConfig>) -> Result<()> {
        let d = self.d();
        let bad = |msg: String| Err(Error::Validation(msg));
        if let Some(&j) = self.effects.keys().find(|&&j| j == 0 || j > d) {
            return bad(format!("relevant variable {j} outside 1..={d}"));
        }
        if self.prevalences.iter().any(|p| !(0.0 < *p && *p < 1.0)) {
            return bad("prevalences must lie strictly between 0 and 1".into());
        }
        if self.prevalences.windows(2).any(|w| w[1] >= w[0]) {
            return bad("prevalences must be strictly decreasing".into());
        }
        for c in &self.confounders {
            if let Some(&j) = c.linked.iter().find(|&&j| j == 0 || j > d) {
                return bad(format!("confounder linked to variable {j} outside 1..={d}"));
            }
            if !(0.0..=1.0).contains(&c.prevalence) || !c.log_or.is_finite() {
                return bad("confounder prevalence or effect invalid".into());
            }
        }
        if self.effects.values().any(|b| !b.is_finite()) {
            return bad("effects must be finite".into());
        }
        if let Some(cfg) = config {
            if d != cfg.d {
                return bad(format!("truth has {d} variables, config has {}", cfg.d));
            }
            if !(cfg.k_min..=cfg.k_max).contains(&self.k()) {
                return bad(format!(
                    "k = {} outside {}..={}",
                    self.k(),
                    cfg.k_min,
                    cfg.k_max
                ));
            }
            let in_range = |b: f64| (cfg.effect_lo..=cfg.effect_hi).contains(&b.abs());
            if !self.effects.values().all(|&b| in_range(b)) {
                return bad("effect magnitude outside the configured bounds".into());
            }
        }
        Ok(())
    }
}

fn signed_magnitude<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> f64 {
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    sign * rng.random_range(config.effect_lo..=config.effect_hi)
}

pub fn draw_ground_truth<R: Rng + ?Sized>(
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<GroundTruth> {
    config.validate()?;
    let d = config.d;
    let k = rng.random_range(config.k_min..=config.k_max);
    let mut order: Vec<usize> = (1..=d).collect();
    order.shuffle(rng);
    let effects: BTreeMap<usize, f64> = order[..k]
        .iter()
        .map(|&j| (j, signed_magnitude(config, rng)))
        .collect();

    // Confounders link to distinct non-relevant variables while any remain.
    let mut pool: Vec<usize> = order[k..].to_vec();
    pool.shuffle(rng);
    let confounders = (0..config.n_confounders)
        .map(|_| {
            let log_or = signed_magnitude(config, rng);
            let take = config.confounder_links.min(pool.len());
            let mut linked: Vec<usize> = pool.drain(..take).collect();
            linked.sort_unstable();
            Confounder {
                log_or,
                linked,
                prevalence: config.confounder_prev,
            }
        })
        .collect();

    let prevalences = if config.jitter_prevalences {
        let (lo, hi) = (config.prev_min.ln(), config.prev_max.ln());
        let mut draws: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi).exp()).collect();
        draws.sort_unstable_by(|a, b| b.total_cmp(a));
        draws
    } else {
        prevalence_grid(d, config.prev_max, config.prev_min)?
    };

    Ok(GroundTruth {
        effects,
        confounders,
        prevalences,
    })
}

/// Contestant-facing data: no truth, no latent columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: BinaryMatrix,
    /// 1 = case, 0 = control.
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn new(x: BinaryMatrix, y: Vec<u8>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Validation(format!(
                "{} design rows but {} outcomes",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(v) = y.iter().find(|&&v| v > 1) {
            return Err(Error::Validation(format!("non-binary outcome {v}")));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_cases(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    /// Per variable (exposed cases, exposed controls).
    pub fn exposure_counts(&self) -> Vec<(usize, usize)> {
        let mut counts = vec![(0, 0); self.d()];
        for i in 0..self.n() {
            for (j, &v) in self.x.row(i).iter().enumerate() {
                if v == 1 {
                    if self.y[i] == 1 {
                        counts[j].0 += 1;
                    } else {
                        counts[j].1 += 1;
                    }
                }
            }
        }
        counts
    }
}

/// A simulated dataset together with the latent confounder columns, for instructor diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub dataset: Dataset,
    pub latent: BinaryMatrix,
}

pub fn simulate_dataset<R: Rng + ?Sized>(
    truth: &GroundTruth,
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<Dataset> {
    Ok(simulate_with_latent(truth, config, rng)?.dataset)
}

/// Retrospective sampling: population records are drawn until both the case
/// and the control pool are full, then the pools are concatenated and shuffled.
pub fn simulate_with_latent<R: Rng + ?Sized>(
    truth: &GroundTruth,
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<Simulation> {
    config.validate()?;
    truth.validate(None)?;
    let d = truth.d();
    if d != config.d {
        return Err(Error::Validation(format!(
            "truth has {d} variables, config has {}",
            config.d
        )));
    }
    let n_latent = truth.confounders.len();
    // links[j] lists the confounders that boost variable j (0-based).
    let mut links: Vec<Vec<usize>> = vec![Vec::new(); d];
    for (c, conf) in truth.confounders.iter().enumerate() {
        for &j in &conf.linked {
            links[j - 1].push(c);
        }
    }
    let boosted: Vec<f64> = truth
        .prevalences
        .iter()
        .map(|p| (p * config.confounder_boost).min(config.confounder_boost_cap.max(*p)))
        .collect();
    let effects: Vec<f64> = (1..=d)
        .map(|j| truth.effects.get(&j).copied().unwrap_or(0.0))
        .collect();

    let width = d + n_latent;
    let mut cases: Vec<u8> = Vec::with_capacity(config.n_cases * width);
    let mut controls: Vec<u8> = Vec::with_capacity(config.n_controls * width);
    let (mut n_case, mut n_control) = (0usize, 0usize);
    let budget = config.draw_budget_factor.saturating_mul(config.n() as u64);
    let mut draws = 0u64;
    let mut record = vec![0u8; width];

    while n_case < config.n_cases || n_control < config.n_controls {
        if draws >= budget {
            return Err(Error::SimulationBudget {
                draws,
                cases: n_case,
                n_cases: config.n_cases,
                controls: n_control,
                n_controls: config.n_controls,
            });
        }
        draws += 1;
        let mut eta = config.baseline_intercept;
        for (c, conf) in truth.confounders.iter().enumerate() {
            let active = rng.random::<f64>() < conf.prevalence;
            record[d + c] = active as u8;
            if active {
                eta += conf.log_or;
            }
        }
        for j in 0..d {
            let lifted = links[j].iter().any(|&c| record[d + c] == 1);
            let p = if lifted {
                boosted[j]
            } else {
                truth.prevalences[j]
            };
            let v = rng.random::<f64>() < p;
            record[j] = v as u8;
            if v {
                eta += effects[j];
            }
        }
        if rng.random::<f64>() < expit(eta) {
            if n_case < config.n_cases {
                cases.extend_from_slice(&record);
                n_case += 1;
            }
        } else if n_control < config.n_controls {
            controls.extend_from_slice(&record);
            n_control += 1;
        }
    }

    let n = config.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut x = Vec::with_capacity(n * d);
    let mut latent = Vec::with_capacity(n * n_latent);
    let mut y = Vec::with_capacity(n);
    for i in order {
        let (pool, row, outcome) = if i < config.n_cases {
            (&cases, i, 1)
        } else {
            (&controls, i - config.n_cases, 0)
        };
        let rec = &pool[row * width..(row + 1) * width];
        x.extend_from_slice(&rec[..d]);
        latent.extend_from_slice(&rec[d..]);
        y.push(outcome);
    }
    Ok(Simulation {
        dataset: Dataset::new(BinaryMatrix::new(n, d, x)?, y)?,
        latent: BinaryMatrix::new(n, n_latent, latent)?,
    })
}
