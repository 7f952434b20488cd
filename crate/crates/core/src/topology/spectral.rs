use nalgebra::DMatrix;

use super::matrix::EIGEN_TOL;
use super::MixingSchedule;
use crate::error::{Error, Result};

pub(crate) fn lambda_of_symmetric(w: &DMatrix<f64>) -> f64 {
    let n = w.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut eig: Vec<f64> = w.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let lambda = eig[1].abs().max(eig[n - 1].abs());
    if lambda < EIGEN_TOL {
        0.0
    } else {
        lambda.min(1.0)
    }
}

/// `max(|lambda_2|, |lambda_N|)` of a symmetric matrix's sorted spectrum.
pub fn spectral_lambda(w: &DMatrix<f64>) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::param("spectral lambda needs a square matrix"));
    }
    let n = w.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (w[(i, j)] - w[(j, i)]).abs() > super::STOCHASTIC_TOL {
                return Err(Error::param(format!(
                    "spectral lambda needs a symmetric matrix; w[{i},{j}] != w[{j},{i}]"
                )));
            }
        }
    }
    Ok(lambda_of_symmetric(w))
}

/// Largest singular value of `W^(P) ... W^(1) - J` over one period, where
/// `J` is the all-`1/N` matrix.
pub fn effective_lambda(schedule: &MixingSchedule) -> f64 {
    let n = schedule.workers();
    let product = schedule
        .rounds()
        .iter()
        .fold(DMatrix::<f64>::identity(n, n), |acc, w| w.weights() * acc);
    let deviation = product - DMatrix::from_element(n, n, 1.0 / n as f64);
    let sigma = deviation
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s));
    if sigma < EIGEN_TOL {
        0.0
    } else {
        sigma.min(1.0)
    }
}
