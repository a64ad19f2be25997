//! Stratified fold assignment and held-out deviance.

use rand::seq::SliceRandom;
use rand::Rng;

use super::design::{BinaryMatrix, GroupedData};
use super::irls::{deviance, fit_grouped, FitOptions, FitResult, PenaltyKind, PenaltySpec};
use super::lasso::fit_lasso_grouped;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CvPlan {
    pub n_folds: usize,
    /// Fold label (1-based) of every observation.
    pub assignments: Vec<usize>,
    pub stratified: bool,
}

impl CvPlan {
    /// Row indices (0-based) held out in `fold` (1-based).
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        self.rows_where(|f| f == fold)
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        self.rows_where(|f| f != fold)
    }

    fn rows_where(&self, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| keep(f))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Stratified folds: cases and controls are shuffled separately and dealt
/// round-robin, controls continuing where the cases stopped.
pub fn make_folds<R: Rng + ?Sized>(y: &[u8], n_folds: usize, rng: &mut R) -> Result<CvPlan> {
    if n_folds < 2 {
        return Err(Error::Stratification(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    let mut cases: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let mut controls: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
    if cases.len() + controls.len() != y.len() {
        return Err(Error::Validation("outcome must be 0/1".into()));
    }
    if cases.len() < n_folds || controls.len() < n_folds {
        return Err(Error::Stratification(format!(
            "{} cases and {} controls cannot fill {n_folds} folds",
            cases.len(),
            controls.len()
        )));
    }
    cases.shuffle(rng);
    controls.shuffle(rng);
    let mut assignments = vec![0; y.len()];
    for (slot, &i) in cases.iter().chain(&controls).enumerate() {
        assignments[i] = slot % n_folds + 1;
    }
    Ok(CvPlan {
        n_folds,
        assignments,
        stratified: true,
    })
}

/// Fits `data` under any penalty kind.
pub fn fit_with_penalty(
    data: &GroupedData,
    penalty: &PenaltySpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    match penalty.kind {
        PenaltyKind::Lasso if penalty.lambda > 0.0 => fit_lasso_grouped(data, penalty.lambda),
        _ => fit_grouped(data, penalty, opts),
    }
}

/// Per-fold grouped training and test data, built once and projected onto
/// column subsets so that many subsets share the same folds.
#[derive(Clone, Debug)]
pub struct CvData {
    n: usize,
    train: Vec<GroupedData>,
    test: Vec<GroupedData>,
    pub options: FitOptions,
}

impl CvData {
    pub fn new(x: &BinaryMatrix, y: &[u8], plan: &CvPlan) -> Result<Self> {
        if plan.assignments.len() != y.len() {
            return Err(Error::Validation(format!(
                "fold plan covers {} rows, data has {}",
                plan.assignments.len(),
                y.len()
            )));
        }
        let mut train = Vec::with_capacity(plan.n_folds);
        let mut test = Vec::with_capacity(plan.n_folds);
        for fold in 1..=plan.n_folds {
            train.push(GroupedData::from_rows(x, y, plan.train_rows(fold))?);
            test.push(GroupedData::from_rows(x, y, plan.test_rows(fold))?);
        }
        Ok(Self {
            n: y.len(),
            train,
            test,
            options: FitOptions::default(),
        })
    }

    pub fn n_folds(&self) -> usize {
        self.train.len()
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn fold_train(&self, fold: usize) -> &GroupedData {
        &self.train[fold]
    }

    pub fn fold_test(&self, fold: usize) -> &GroupedData {
        &self.test[fold]
    }

    /// Held-out deviance (sum over the fold's observations) for each fold, in fold order.
    /// `subset` holds 0-based column indices.
    pub fn fold_deviances(&self, subset: &[usize], penalty: &PenaltySpec) -> Result<Vec<f64>> {
        self.train
            .iter()
            .zip(&self.test)
            .map(|(train, test)| {
                let fit = fit_with_penalty(&train.project(subset), penalty, &self.options)?;
                Ok(deviance(&test.project(subset), &fit.coefficients))
            })
            .collect()
    }

    /// Total held-out deviance divided by n.
    pub fn deviance(&self, subset: &[usize], penalty: &PenaltySpec) -> Result<f64> {
        Ok(self.fold_deviances(subset, penalty)?.iter().sum::<f64>() / self.n as f64)
    }
}

/// Mean held-out deviance per observation of the model on `subset` (0-based columns).
pub fn cv_deviance(
    x: &BinaryMatrix,
    y: &[u8],
    subset: &[usize],
    plan: &CvPlan,
    penalty: &PenaltySpec,
) -> Result<f64> {
    if let Some(&j) = subset.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::Validation(format!(
            "column {j} out of range for {} columns",
            x.ncols()
        )));
    }
    CvData::new(x, y, plan)?.deviance(subset, penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn balanced(n_each: usize) -> Vec<u8> {
        (0..2 * n_each).map(|i| (i % 2) as u8).collect()
    }

    #[test]
    fn divisible_stratification_is_exact() {
        let y = balanced(2000);
        let plan = make_folds(&y, 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for fold in 1..=4 {
            let rows = plan.test_rows(fold);
            let cases = rows.iter().filter(|&&i| y[i] == 1).count();
            assert_eq!((cases, rows.len() - cases), (500, 500));
        }
    }

    #[test]
    fn labels_partition_rows() {
        let y: Vec<u8> = (0..103).map(|i| (i % 3 == 0) as u8).collect();
        let plan = make_folds(&y, 5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let mut all: Vec<usize> = (1..=5).flat_map(|f| plan.test_rows(f)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        assert!(plan.assignments.iter().all(|&f| (1..=5).contains(&f)));
        let case_counts: Vec<usize> = (1..=5)
            .map(|f| plan.test_rows(f).iter().filter(|&&i| y[i] == 1).count())
            .collect();
        let (lo, hi) = (
            case_counts.iter().min().unwrap(),
            case_counts.iter().max().unwrap(),
        );
        assert!(hi - lo <= 1);
    }

    #[test]
    fn same_seed_same_folds() {
        let y = balanced(50);
        let a = make_folds(&y, 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = make_folds(&y, 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_class_cannot_be_stratified() {
        let y = [1, 1, 0, 0, 0, 0, 0];
        let err = make_folds(&y, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::Stratification(_)));
        let err = make_folds(&y, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::Stratification(_)));
    }

    #[test]
    fn intercept_only_balanced_deviance_is_two_ln_two() {
        let y = balanced(2000);
        let x = BinaryMatrix::zeros(y.len(), 3);
        let plan = make_folds(&y, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let dev = cv_deviance(&x, &y, &[], &plan, &PenaltySpec::NONE).unwrap();
        assert!((dev - 2.0 * 2f64.ln()).abs() < 0.01);
    }

    #[test]
    fn duplicated_column_yields_finite_deviance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y = balanced(200);
        let mut x = BinaryMatrix::zeros(y.len(), 2);
        for (i, &outcome) in y.iter().enumerate() {
            let v = rng.random::<f64>() < 0.2 + 0.2 * outcome as f64;
            x.set(i, 0, v);
            x.set(i, 1, v);
        }
        let plan = make_folds(&y, 4, &mut rng).unwrap();
        let dev = cv_deviance(&x, &y, &[0, 1], &plan, &PenaltySpec::NONE).unwrap();
        assert!(dev.is_finite());
        let single = cv_deviance(&x, &y, &[0], &plan, &PenaltySpec::NONE).unwrap();
        assert!((dev - single).abs() < 1e-4);
    }

    #[test]
    fn single_class_training_fold_is_degenerate() {
        let y = [1, 1, 0, 0];
        let x = BinaryMatrix::zeros(4, 1);
        let plan = CvPlan {
            n_folds: 2,
            assignments: vec![1, 1, 2, 2],
            stratified: false,
        };
        let err = cv_deviance(&x, &y, &[0], &plan, &PenaltySpec::NONE).unwrap_err();
        assert!(matches!(err, Error::DegenerateOutcome { .. }));
    }
}
