use statrs::function::erf::erfc;

use super::irls::FitResult;
use crate::error::{Error, Result};

/// Two-sided p-value of a standard normal statistic, `2 · (1 − Φ(|z|))`.
pub fn two_sided_normal_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// Wald p-value of every slope (intercept excluded).
pub fn wald_pvalues(fit: &FitResult) -> Result<Vec<f64>> {
    let se = fit.std_errors.as_ref().ok_or_else(|| {
        Error::UnsupportedFit(
            "Wald p-values need standard errors from an unpenalized converged fit".into(),
        )
    })?;
    Ok(fit
        .slopes()
        .iter()
        .zip(&se[1..])
        .map(|(b, s)| {
            if *b == 0.0 {
                1.0
            } else {
                two_sided_normal_p(b / s)
            }
        })
        .collect())
}
