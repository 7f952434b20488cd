use nalgebra::DMatrix;

use crate::common::ParamVector;
use crate::error::{Error, Result};

/// Tolerance for symmetry and row/column sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Tolerance used when classifying eigenvalues.
pub(crate) const EIGEN_TOL: f64 = 1e-10;

/// Outcome of checking a candidate gossip matrix against the mixing-matrix
/// assumptions. Failures are reported, never raised.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub square: bool,
    pub symmetric: bool,
    pub non_negative: bool,
    pub rows_sum_to_one: bool,
    pub columns_sum_to_one: bool,
    /// All eigenvalues are real and lie in `(-1, 1]`.
    pub eigenvalues_in_range: bool,
    pub max_asymmetry: f64,
    pub max_row_deviation: f64,
    pub max_column_deviation: f64,
}

impl ValidationReport {
    pub fn doubly_stochastic(&self) -> bool {
        self.rows_sum_to_one && self.columns_sum_to_one
    }

    pub fn is_valid(&self) -> bool {
        self.square
            && self.symmetric
            && self.non_negative
            && self.doubly_stochastic()
            && self.eigenvalues_in_range
    }

    fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.square {
            out.push("not square");
        }
        if !self.symmetric {
            out.push("not symmetric");
        }
        if !self.non_negative {
            out.push("negative entry");
        }
        if !self.rows_sum_to_one {
            out.push("row sums differ from 1");
        }
        if !self.columns_sum_to_one {
            out.push("column sums differ from 1");
        }
        if !self.eigenvalues_in_range {
            out.push("eigenvalue outside (-1, 1]");
        }
        out
    }
}

pub fn validate(w: &DMatrix<f64>) -> ValidationReport {
    if !w.is_square() || w.nrows() == 0 {
        return ValidationReport {
            square: false,
            symmetric: false,
            non_negative: false,
            rows_sum_to_one: false,
            columns_sum_to_one: false,
            eigenvalues_in_range: false,
            max_asymmetry: f64::INFINITY,
            max_row_deviation: f64::INFINITY,
            max_column_deviation: f64::INFINITY,
        };
    }
    let n = w.nrows();
    let mut max_asymmetry: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asymmetry = max_asymmetry.max((w[(i, j)] - w[(j, i)]).abs());
        }
    }
    let max_row_deviation = w
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let max_column_deviation = w
        .column_iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let symmetric = max_asymmetry <= STOCHASTIC_TOL;
    let eigenvalues_in_range = if symmetric {
        w.clone()
            .symmetric_eigenvalues()
            .iter()
            .all(|&l| l > -1.0 + EIGEN_TOL && l <= 1.0 + EIGEN_TOL)
    } else {
        w.complex_eigenvalues().iter().all(|l| {
            l.im.abs() <= EIGEN_TOL && l.re > -1.0 + EIGEN_TOL && l.re <= 1.0 + EIGEN_TOL
        })
    };
    ValidationReport {
        square: true,
        symmetric,
        non_negative: w.iter().all(|&v| v >= 0.0),
        rows_sum_to_one: max_row_deviation <= STOCHASTIC_TOL,
        columns_sum_to_one: max_column_deviation <= STOCHASTIC_TOL,
        eigenvalues_in_range,
        max_asymmetry,
        max_row_deviation,
        max_column_deviation,
    }
}

/// Symmetric, non-negative, doubly stochastic gossip weights `w_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    weights: DMatrix<f64>,
}

impl MixingMatrix {
    /// Wraps `weights` after checking every mixing-matrix property.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let report = validate(&weights);
        if !report.is_valid() {
            return Err(Error::param(format!(
                "not a valid mixing matrix: {}",
                report.failures().join(", ")
            )));
        }
        Ok(Self { weights })
    }

    /// Exact averaging inside each group; workers not listed keep their own
    /// model (self-weight 1).
    pub fn from_groups(workers: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut w = DMatrix::<f64>::zeros(workers, workers);
        let mut seen = vec![false; workers];
        for group in groups {
            let share = 1.0 / group.len() as f64;
            for &i in group {
                if i >= workers {
                    return Err(Error::param(format!("worker {i} out of range 0..{workers}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::param(format!("worker {i} listed in two groups")));
                }
                for &j in group {
                    w[(i, j)] = share;
                }
            }
        }
        for (i, s) in seen.iter().enumerate() {
            if !s {
                w[(i, i)] = 1.0;
            }
        }
        Self::new(w)
    }

    pub fn complete(workers: usize) -> Self {
        let share = 1.0 / workers as f64;
        Self {
            weights: DMatrix::from_element(workers, workers, share),
        }
    }

    pub fn identity(workers: usize) -> Self {
        Self {
            weights: DMatrix::identity(workers, workers),
        }
    }

    pub fn workers(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// `{ j : w_ij > 0 }`, which includes `i` whenever it keeps a self-weight.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.workers())
            .filter(|&j| self.weights[(i, j)] > 0.0)
            .collect()
    }

    /// `sum_j w_ij x_j` for one worker.
    pub fn mix_row(&self, i: usize, models: &[ParamVector]) -> Result<ParamVector> {
        if models.len() != self.workers() {
            return Err(Error::LengthMismatch {
                expected: self.workers(),
                found: models.len(),
            });
        }
        let row: Vec<f64> = self.weights.row(i).iter().copied().collect();
        ParamVector::weighted_sum(&row, models)
    }

    /// One gossip round `X <- W X` over all workers.
    pub fn mix(&self, models: &[ParamVector]) -> Result<Vec<ParamVector>> {
        (0..self.workers()).map(|i| self.mix_row(i, models)).collect()
    }

    pub fn spectral_lambda(&self) -> f64 {
        super::spectral::lambda_of_symmetric(&self.weights)
    }
}
