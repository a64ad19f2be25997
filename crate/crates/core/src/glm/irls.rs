//! Maximum-likelihood and ridge logistic regression by IRLS with step-halving.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::{BinaryMatrix, GroupedData};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    None,
    Ridge,
    Lasso,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub penalize_intercept: bool,
}

impl PenaltySpec {
    pub const NONE: PenaltySpec = PenaltySpec {
        kind: PenaltyKind::None,
        lambda: 0.0,
        penalize_intercept: false,
    };

    pub fn ridge(lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::Ridge,
            lambda,
            penalize_intercept: false,
        }
    }

    pub fn lasso(lambda: f64) -> Self {
        Self {
            kind: PenaltyKind::Lasso,
            lambda,
            penalize_intercept: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_nan() || self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "penalty weight must be a finite non-negative number, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// A zero weight is the unpenalized fit whatever the kind.
    pub fn is_unpenalized(&self) -> bool {
        self.kind == PenaltyKind::None || self.lambda == 0.0
    }
}

impl Default for PenaltySpec {
    fn default() -> Self {
        Self::NONE
    }
}

/// Numerical constants of the fitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Relative change in the (penalized) deviance that ends iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Any coefficient larger than this in magnitude is taken as separation.
    pub separation_threshold: f64,
    /// Ridge weight of the refit after separation or rank deficiency.
    pub fallback_lambda: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100,
            separation_threshold: 15.0,
            fallback_lambda: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// Intercept first, then one log odds ratio per column.
    pub coefficients: Vec<f64>,
    /// Same layout as `coefficients`; only for unpenalized, converged fits.
    pub std_errors: Option<Vec<f64>>,
    /// −2 · log-likelihood of the fitted data.
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
    pub separation_flag: bool,
    /// Penalty actually used, which differs from the request after a fallback refit.
    pub penalty: PenaltySpec,
    /// Penalized deviance after each accepted iteration, starting value first.
    pub objective_trace: Vec<f64>,
}

impl FitResult {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.coefficients[1..]
    }

    /// Fitted case probability for every group of `data`.
    pub fn predict(&self, data: &GroupedData) -> Vec<f64> {
        (0..data.ngroups())
            .map(|g| expit(data.eta(g, &self.coefficients)))
            .collect()
    }
}

pub fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// ln(1 + e^eta) without overflow.
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

pub fn log_likelihood(data: &GroupedData, coef: &[f64]) -> f64 {
    (0..data.ngroups())
        .map(|g| {
            let eta = data.eta(g, coef);
            data.cases(g) * eta - data.trials(g) * softplus(eta)
        })
        .sum()
}

pub fn deviance(data: &GroupedData, coef: &[f64]) -> f64 {
    -2.0 * log_likelihood(data, coef)
}

/// Gradient of the log-likelihood with respect to `[intercept, slopes...]`.
pub fn score_vector(data: &GroupedData, coef: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; data.ncols() + 1];
    for g in 0..data.ngroups() {
        let r = data.cases(g) - data.trials(g) * expit(data.eta(g, coef));
        grad[0] += r;
        for_each_active(data.key(g), |j| grad[j + 1] += r);
    }
    grad
}

fn for_each_active(mut bits: u64, mut f: impl FnMut(usize)) {
    while bits != 0 {
        f(bits.trailing_zeros() as usize);
        bits &= bits - 1;
    }
}

/// Score vector and observed information `X'WX`.
fn derivatives(data: &GroupedData, coef: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let q = data.ncols() + 1;
    let mut grad = DVector::zeros(q);
    let mut info = DMatrix::zeros(q, q);
    let mut active = Vec::with_capacity(q);
    for g in 0..data.ngroups() {
        let p = expit(data.eta(g, coef));
        let m = data.trials(g);
        let r = data.cases(g) - m * p;
        let w = m * p * (1.0 - p);
        active.clear();
        active.push(0);
        for_each_active(data.key(g), |j| active.push(j + 1));
        for (a, &i) in active.iter().enumerate() {
            grad[i] += r;
            for &j in &active[a..] {
                info[(i, j)] += w;
            }
        }
    }
    info.fill_lower_triangle_with_upper_triangle();
    (grad, info)
}

enum IrlsFailure {
    Separation,
    Singular,
}

struct IrlsOutcome {
    coef: Vec<f64>,
    converged: bool,
    iterations: usize,
    trace: Vec<f64>,
    /// Penalized information at the final coefficients.
    information: DMatrix<f64>,
}

struct Ridge {
    lambda: f64,
    penalize_intercept: bool,
}

impl Ridge {
    fn penalized(&self, i: usize) -> bool {
        self.lambda > 0.0 && (i > 0 || self.penalize_intercept)
    }

    /// Penalty on the deviance scale: 2 · λ · ‖β‖².
    fn deviance_term(&self, coef: &[f64]) -> f64 {
        2.0 * self.lambda
            * coef
                .iter()
                .enumerate()
                .filter(|(i, _)| self.penalized(*i))
                .map(|(_, b)| b * b)
                .sum::<f64>()
    }

    fn objective(&self, data: &GroupedData, coef: &[f64]) -> f64 {
        deviance(data, coef) + self.deviance_term(coef)
    }

    fn apply(&self, coef: &[f64], grad: &mut DVector<f64>, info: &mut DMatrix<f64>) {
        for (i, b) in coef.iter().enumerate() {
            if self.penalized(i) {
                grad[i] -= 2.0 * self.lambda * b;
                info[(i, i)] += 2.0 * self.lambda;
            }
        }
    }
}

fn irls(
    data: &GroupedData,
    ridge: &Ridge,
    opts: &FitOptions,
    check_separation: bool,
) -> std::result::Result<IrlsOutcome, IrlsFailure> {
    let mut coef = vec![0.0; data.ncols() + 1];
    coef[0] = logit((data.total_cases() + 0.5) / (data.total_trials() + 1.0));
    let mut objective = ridge.objective(data, &coef);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let (mut grad, mut info) = derivatives(data, &coef);
        ridge.apply(&coef, &mut grad, &mut info);
        let chol = info.cholesky().ok_or(IrlsFailure::Singular)?;
        let delta = chol.solve(&grad);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(IrlsFailure::Singular);
        }

        // Below this predicted decrease the objective cannot resolve the step,
        // so the full Newton step is taken without a comparison.
        let predicted = grad.dot(&delta);
        let resolution = 1e-12 * (objective.abs() + 1.0);
        let mut step = 1.0;
        let mut accepted = None;
        if predicted < resolution {
            let candidate: Vec<f64> = coef.iter().zip(delta.iter()).map(|(b, d)| b + d).collect();
            let value = ridge.objective(data, &candidate);
            accepted = Some((candidate, value));
        }
        for _ in 0..40 {
            if accepted.is_some() {
                break;
            }
            let candidate: Vec<f64> = coef
                .iter()
                .zip(delta.iter())
                .map(|(b, d)| b + step * d)
                .collect();
            let value = ridge.objective(data, &candidate);
            if value <= objective {
                accepted = Some((candidate, value));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, value)) = accepted else {
            // No descent left at machine precision.
            converged = true;
            break;
        };

        let change = (objective - value).abs() / (value.abs() + 0.1);
        coef = candidate;
        objective = value;
        trace.push(objective);
        if check_separation && coef.iter().any(|b| b.abs() > opts.separation_threshold) {
            return Err(IrlsFailure::Separation);
        }
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }

    let (mut grad, mut information) = derivatives(data, &coef);
    ridge.apply(&coef, &mut grad, &mut information);
    Ok(IrlsOutcome {
        coef,
        converged,
        iterations,
        trace,
        information,
    })
}

fn standard_errors(information: DMatrix<f64>) -> Option<Vec<f64>> {
    let inverse = information.cholesky()?.inverse();
    let se: Vec<f64> = (0..inverse.nrows())
        .map(|i| inverse[(i, i)].sqrt())
        .collect();
    se.iter().all(|s| s.is_finite()).then_some(se)
}

/// Fits an unpenalized or ridge model to grouped data.
///
/// An unpenalized fit that diverges past `separation_threshold` or whose
/// information matrix is singular is refit with ridge weight
/// `fallback_lambda`; the result carries `separation_flag` and standard errors
/// from the (slightly) penalized information.
pub fn fit_grouped(
    data: &GroupedData,
    penalty: &PenaltySpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    penalty.validate()?;
    data.require_two_classes()?;

    if penalty.is_unpenalized() {
        let plain = Ridge {
            lambda: 0.0,
            penalize_intercept: false,
        };
        let (outcome, separated, used) = match irls(data, &plain, opts, true) {
            Ok(outcome) => (outcome, false, PenaltySpec::NONE),
            Err(IrlsFailure::Separation | IrlsFailure::Singular) => {
                let fallback = Ridge {
                    lambda: opts.fallback_lambda,
                    penalize_intercept: false,
                };
                let outcome = irls(data, &fallback, opts, false).map_err(|_| Error::Singular)?;
                (outcome, true, PenaltySpec::ridge(opts.fallback_lambda))
            }
        };
        let std_errors = if outcome.converged {
            standard_errors(outcome.information)
        } else {
            None
        };
        return Ok(FitResult {
            deviance: deviance(data, &outcome.coef),
            coefficients: outcome.coef,
            std_errors,
            converged: outcome.converged,
            iterations: outcome.iterations,
            separation_flag: separated,
            penalty: used,
            objective_trace: outcome.trace,
        });
    }

    if penalty.kind == PenaltyKind::Lasso {
        return Err(Error::UnsupportedFit(
            "lasso penalties are fitted by coordinate descent, not IRLS".into(),
        ));
    }
    let ridge = Ridge {
        lambda: penalty.lambda,
        penalize_intercept: penalty.penalize_intercept,
    };
    let outcome = irls(data, &ridge, opts, false).map_err(|_| Error::Singular)?;
    Ok(FitResult {
        deviance: deviance(data, &outcome.coef),
        coefficients: outcome.coef,
        std_errors: None,
        converged: outcome.converged,
        iterations: outcome.iterations,
        separation_flag: false,
        penalty: *penalty,
        objective_trace: outcome.trace,
    })
}

/// Fits `y ~ x` with an intercept, unpenalized or ridge.
pub fn fit_logistic(x: &BinaryMatrix, y: &[u8], penalty: &PenaltySpec) -> Result<FitResult> {
    if x.nrows() <= x.ncols() {
        return Err(Error::Validation(format!(
            "need more rows than columns, got {} x {}",
            x.nrows(),
            x.ncols()
        )));
    }
    let data = GroupedData::from_xy(x, y)?;
    fit_grouped(&data, penalty, &FitOptions::default())
}
