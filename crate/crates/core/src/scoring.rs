//! Contest scoring: the linear count rule, Youden's index, proper scoring
//! rules for probability forecasts, and leaderboard ordering.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::selectors::Submission;
use crate::sim::GroundTruth;

/// Points per classification cell of a submission.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoringWeights {
    pub w_tp: f64,
    pub w_fp: f64,
    pub w_tn: f64,
    pub w_fn: f64,
}

impl ScoringWeights {
    /// The announced classroom rule: ±10 per relevant-variable decision, ±3 per irrelevant one.
    pub const TABLE1: ScoringWeights = ScoringWeights {
        w_tp: 10.0,
        w_fp: -10.0,
        w_tn: 3.0,
        w_fn: -3.0,
    };

    /// Asymmetric variant with a heavier false-negative penalty, which breaks most ties.
    pub const PROPOSED: ScoringWeights = ScoringWeights {
        w_tp: 10.0,
        w_fp: -10.0,
        w_tn: 3.0,
        w_fn: -4.0,
    };

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.w_tp, self.w_fp, self.w_tn, self.w_fn]
            .iter()
            .all(|w| w.is_finite());
        if !all_finite
            || !(self.w_tp > 0.0 && self.w_fn <= 0.0 && self.w_tn > 0.0 && self.w_fp <= 0.0)
        {
            return Err(Error::Validation(format!(
                "weights must reward correct cells and penalize errors: {self:?}"
            )));
        }
        if self.w_fp.abs() < self.w_fn.abs() {
            return Err(Error::Validation(
                "false positives must be penalized at least as heavily as false negatives".into(),
            ));
        }
        Ok(())
    }
}

impl Default for ScoringWeights {
    fn default() -> Self {
        Self::TABLE1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn k(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn d(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn tpr(&self) -> Option<f64> {
        (self.k() > 0).then(|| self.tp as f64 / self.k() as f64)
    }

    pub fn tnr(&self) -> Option<f64> {
        let negatives = self.fp + self.tn;
        (negatives > 0).then(|| self.tn as f64 / negatives as f64)
    }

    pub fn points(&self, w: &ScoringWeights) -> f64 {
        w.w_tp * self.tp as f64
            + w.w_fp * self.fp as f64
            + w.w_tn * self.tn as f64
            + w.w_fn * self.fn_ as f64
    }
}

pub fn confusion_counts(
    submission: &Submission,
    truth: &GroundTruth,
    d: usize,
) -> Result<Confusion> {
    if let Some(&j) = submission.selected.iter().find(|&&j| j == 0 || j > d) {
        return Err(Error::Validation(format!(
            "submission '{}' selects variable {j}, valid range is 1..={d}",
            submission.team
        )));
    }
    if let Some(&j) = truth.effects.keys().find(|&&j| j == 0 || j > d) {
        return Err(Error::Validation(format!(
            "truth variable {j} outside 1..={d}"
        )));
    }
    let tp = submission
        .selected
        .iter()
        .filter(|j| truth.is_relevant(**j))
        .count();
    let fp = submission.selected.len() - tp;
    let fn_ = truth.k() - tp;
    Ok(Confusion {
        tp,
        fp,
        tn: d - tp - fp - fn_,
        fn_,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub team: String,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `None` when the truth has no relevant variables.
    pub tpr: Option<f64>,
    /// `None` when every variable is relevant.
    pub tnr: Option<f64>,
    pub score: f64,
}

impl ScoreReport {
    pub fn confusion(&self) -> Confusion {
        Confusion {
            tp: self.tp,
            fp: self.fp,
            tn: self.tn,
            fn_: self.fn_,
        }
    }

    pub fn tpr_percent(&self) -> Option<u32> {
        self.tpr.map(percent_half_up)
    }

    pub fn tnr_percent(&self) -> Option<u32> {
        self.tnr.map(percent_half_up)
    }
}

/// A rate in whole percent, halves rounded up.
pub fn percent_half_up(rate: f64) -> u32 {
    // Nudge past representation error so that e.g. 0.125 → 12.5 → 13.
    (rate * 100.0 + 0.5 + 1e-9).floor() as u32
}

pub fn contest_score(
    submission: &Submission,
    truth: &GroundTruth,
    weights: &ScoringWeights,
) -> Result<ScoreReport> {
    weights.validate()?;
    let c = confusion_counts(submission, truth, truth.d())?;
    Ok(report(&submission.team, c, c.points(weights)))
}

fn report(team: &str, c: Confusion, score: f64) -> ScoreReport {
    ScoreReport {
        team: team.to_string(),
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        tpr: c.tpr(),
        tnr: c.tnr(),
        score,
    }
}

pub fn youden_index(submission: &Submission, truth: &GroundTruth, d: usize) -> Result<f64> {
    let c = confusion_counts(submission, truth, d)?;
    match (c.tpr(), c.tnr()) {
        (Some(tpr), Some(tnr)) => Ok(tpr + tnr - 1.0),
        _ => Err(Error::UndefinedRate(format!(
            "Youden's index needs 0 < k < d, got k = {} with d = {d}",
            c.k()
        ))),
    }
}

/// Report whose `score` is Youden's index instead of points.
pub fn youden_report(submission: &Submission, truth: &GroundTruth) -> Result<ScoreReport> {
    let j = youden_index(submission, truth, truth.d())?;
    let c = confusion_counts(submission, truth, truth.d())?;
    Ok(report(&submission.team, c, j))
}

fn check_forecasts(probs: &[f64], y: &[u8]) -> Result<()> {
    if probs.len() != y.len() {
        return Err(Error::Validation(format!(
            "{} forecasts for {} outcomes",
            probs.len(),
            y.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::Validation("no forecasts to score".into()));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Validation(
            "forecast probabilities must lie in [0, 1]".into(),
        ));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::Validation("outcomes must be 0/1".into()));
    }
    Ok(())
}

/// Mean squared error of probability forecasts.
pub fn brier_score(probs: &[f64], y: &[u8]) -> Result<f64> {
    check_forecasts(probs, y)?;
    Ok(probs
        .iter()
        .zip(y)
        .map(|(p, &o)| (p - o as f64).powi(2))
        .sum::<f64>()
        / probs.len() as f64)
}

pub const LOG_SCORE_EPS: f64 = 1e-12;

/// Mean negative log-likelihood, forecasts clipped to `[ε, 1 − ε]`.
pub fn log_score(probs: &[f64], y: &[u8]) -> Result<f64> {
    check_forecasts(probs, y)?;
    Ok(probs
        .iter()
        .zip(y)
        .map(|(p, &o)| {
            let p = p.clamp(LOG_SCORE_EPS, 1.0 - LOG_SCORE_EPS);
            if o == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / probs.len() as f64)
}

fn leaderboard_order(a: &ScoreReport, b: &ScoreReport) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.fp.cmp(&b.fp))
        .then(b.tp.cmp(&a.tp))
        .then_with(|| a.team.cmp(&b.team))
}

/// Highest score first; ties go to fewer false positives, then more true
/// positives, then the team label.
pub fn rank_leaderboard(mut reports: Vec<ScoreReport>) -> Vec<ScoreReport> {
    reports.sort_by(leaderboard_order);
    reports
}
