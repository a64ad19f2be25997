//! Engine for variable-selection contests on sparse binary case-control data.
//!
//! * [`sim`] draws hidden ground truths and simulates retrospectively sampled
//!   datasets.
//! * [`glm`] fits logistic models: IRLS, ridge, lasso paths, Wald p-values,
//!   stratified cross-validation and the bootstrap.
//! * [`selectors`] turns a dataset into a [`Submission`] using one of the
//!   contest strategies or a baseline.
//! * [`scoring`] rates submissions against the truth and ranks them.

pub mod error;
pub mod glm;
pub mod scoring;
pub mod selectors;
pub mod sim;

pub use error::{Error, Result};
pub use glm::{BinaryMatrix, CvPlan, FitResult, PenaltyKind, PenaltySpec};
pub use scoring::{Confusion, ScoreReport, ScoringWeights};
pub use selectors::{Method, PValueTable, Selection, SelectorParams, SelectorSpec, Submission};
pub use sim::{Confounder, Dataset, GroundTruth, SimulationConfig};
