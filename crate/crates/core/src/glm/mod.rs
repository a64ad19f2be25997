//! Logistic regression on binary designs: IRLS and ridge fits, lasso paths,
//! Wald inference, stratified cross-validation and bootstrap resampling.

mod cv;
mod design;
mod inference;
mod irls;
mod lasso;
mod resample;

pub use cv::{cv_deviance, fit_with_penalty, make_folds, CvData, CvPlan};
pub use design::{BinaryMatrix, GroupedData, MAX_COLUMNS};
pub use inference::{two_sided_normal_p, wald_pvalues};
pub use irls::{
    deviance, expit, fit_grouped, fit_logistic, log_likelihood, logit, score_vector, FitOptions,
    FitResult, PenaltyKind, PenaltySpec,
};
pub use lasso::{
    fit_lasso_grouped, fit_lasso_path, fit_lasso_path_grouped, lambda_grid, lambda_max,
    Standardization,
};
pub use resample::bootstrap_resample;
