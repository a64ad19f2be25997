//! Binary design matrices and their grouped (covariate-pattern) form.
//!
//! With 0/1 covariates the Bernoulli likelihood only depends on the number of
//! cases and observations sharing each distinct covariate row, so every fit in
//! this crate runs on [`GroupedData`]. A 4,000 × 20 sparse design collapses to a
//! few dozen patterns, which is what makes exhaustive subset search affordable.

use crate::error::{Error, Result};

/// Largest column count a grouped pattern key can hold.
pub const MAX_COLUMNS: usize = 64;

/// Dense row-major 0/1 matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Validation(format!(
                "matrix data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|&v| v > 1) {
            return Err(Error::Validation(format!(
                "non-binary entry {} at row {}, column {}",
                data[pos],
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Validation("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.cols + col] = value as u8;
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column_sum(&self, col: usize) -> usize {
        (0..self.rows).map(|i| self.get(i, col) as usize).sum()
    }

    /// Copy of the given (0-based) columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> BinaryMatrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        BinaryMatrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> BinaryMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        BinaryMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Row packed into a bit key, bit `j` holding column `j`.
    pub fn row_key(&self, row: usize) -> u64 {
        self.row(row)
            .iter()
            .enumerate()
            .fold(0u64, |key, (j, &v)| key | ((v as u64) << j))
    }
}

/// Binomial data aggregated by distinct covariate pattern, sorted by key.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedData {
    cols: usize,
    keys: Vec<u64>,
    cases: Vec<f64>,
    trials: Vec<f64>,
}

impl GroupedData {
    /// Groups all rows of `(x, y)`.
    pub fn from_xy(x: &BinaryMatrix, y: &[u8]) -> Result<Self> {
        Self::from_rows(x, y, 0..x.nrows())
    }

    /// Groups the listed rows; a row listed twice counts twice.
    pub fn from_rows(
        x: &BinaryMatrix,
        y: &[u8],
        rows: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::Validation(format!(
                "outcome length {} does not match {} design rows",
                y.len(),
                x.nrows()
            )));
        }
        if x.ncols() > MAX_COLUMNS {
            return Err(Error::Validation(format!(
                "{} columns exceed the supported maximum of {MAX_COLUMNS}",
                x.ncols()
            )));
        }
        if let Some(v) = y.iter().find(|&&v| v > 1) {
            return Err(Error::Validation(format!("non-binary outcome value {v}")));
        }
        let cells = rows
            .into_iter()
            .map(|i| (x.row_key(i), y[i] as f64, 1.0))
            .collect();
        Ok(Self::collapse(x.ncols(), cells))
    }

    /// Builds grouped data from explicit `(key, cases, trials)` cells, merging duplicates.
    pub fn from_cells(cols: usize, cells: Vec<(u64, f64, f64)>) -> Result<Self> {
        if cols > MAX_COLUMNS {
            return Err(Error::Validation(format!(
                "{cols} columns exceed the supported maximum of {MAX_COLUMNS}"
            )));
        }
        if cells
            .iter()
            .any(|&(k, c, t)| !(0.0..=t).contains(&c) || (cols < 64 && k >> cols != 0))
        {
            return Err(Error::Validation("inconsistent grouped cell".into()));
        }
        Ok(Self::collapse(cols, cells))
    }

    fn collapse(cols: usize, mut cells: Vec<(u64, f64, f64)>) -> Self {
        cells.sort_unstable_by_key(|c| c.0);
        let mut keys = Vec::new();
        let mut cases = Vec::new();
        let mut trials: Vec<f64> = Vec::new();
        for (key, c, t) in cells {
            if keys.last() == Some(&key) {
                *cases.last_mut().unwrap() += c;
                *trials.last_mut().unwrap() += t;
            } else {
                keys.push(key);
                cases.push(c);
                trials.push(t);
            }
        }
        Self {
            cols,
            keys,
            cases,
            trials,
        }
    }

    /// Restricts to the given columns (0-based, in this data's numbering) and re-aggregates.
    pub fn project(&self, cols: &[usize]) -> GroupedData {
        let cells = self
            .keys
            .iter()
            .zip(&self.cases)
            .zip(&self.trials)
            .map(|((&key, &c), &t)| {
                let sub = cols
                    .iter()
                    .enumerate()
                    .fold(0u64, |k, (new, &old)| k | (((key >> old) & 1) << new));
                (sub, c, t)
            })
            .collect();
        Self::collapse(cols.len(), cells)
    }

    /// Number of covariate columns (intercept excluded).
    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn ngroups(&self) -> usize {
        self.keys.len()
    }

    pub fn key(&self, group: usize) -> u64 {
        self.keys[group]
    }

    pub fn cases(&self, group: usize) -> f64 {
        self.cases[group]
    }

    pub fn trials(&self, group: usize) -> f64 {
        self.trials[group]
    }

    pub fn value(&self, group: usize, col: usize) -> f64 {
        ((self.keys[group] >> col) & 1) as f64
    }

    pub fn total_trials(&self) -> f64 {
        self.trials.iter().sum()
    }

    pub fn total_cases(&self) -> f64 {
        self.cases.iter().sum()
    }

    /// Error unless both outcome classes are present.
    pub fn require_two_classes(&self) -> Result<()> {
        let (cases, n) = (self.total_cases(), self.total_trials());
        if cases <= 0.0 || cases >= n {
            return Err(Error::DegenerateOutcome { cases, n });
        }
        Ok(())
    }

    /// Linear predictor for one group: `coef[0]` is the intercept.
    pub fn eta(&self, group: usize, coef: &[f64]) -> f64 {
        let mut eta = coef[0];
        let mut bits = self.keys[group];
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            eta += coef[j + 1];
            bits &= bits - 1;
        }
        eta
    }
}
