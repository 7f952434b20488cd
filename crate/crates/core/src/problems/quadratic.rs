use nalgebra::{DMatrix, DVector};

use super::{check_dim, Problem};
use crate::common::{ParamVector, Purpose, StreamRng};
use crate::error::{Error, Result};

/// `F(x) = (1/2n) |Ax - b|^2` with per-sample gradient `a_k (a_k^T x - b_k)`.
///
/// Gradients are unbounded, so this problem is only for optimizer smoke
/// tests, not for bound evaluation.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: DMatrix<f64>,
    b: DVector<f64>,
    minimizer: ParamVector,
    optimal_value: f64,
    smoothness: f64,
}

pub fn make_quadratic(a: DMatrix<f64>, b: DVector<f64>) -> Result<LeastSquares> {
    let (n, d) = a.shape();
    if n == 0 || d == 0 || b.len() != n {
        return Err(Error::param(format!(
            "least squares needs a non-empty A ({n}x{d}) and b of length {n}, got {}",
            b.len()
        )));
    }
    let gram = a.transpose() * &a;
    let cholesky = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::param("A is rank deficient"))?;
    let eig = gram.symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    if lo <= hi * 1e-12 {
        return Err(Error::param("A is rank deficient"));
    }
    let x = cholesky.solve(&(a.transpose() * &b));
    let residual = &a * &x - &b;
    let optimal_value = residual.norm_squared() / (2.0 * n as f64);
    Ok(LeastSquares {
        minimizer: ParamVector::new(x.iter().copied().collect())?,
        optimal_value,
        smoothness: hi / n as f64,
        a,
        b,
    })
}

/// Least squares with `A` and `b` drawn uniformly from `[-1, 1]`.
pub fn make_random_quadratic(samples: usize, dim: usize, seed: u64) -> Result<LeastSquares> {
    let mut rng = StreamRng::keyed(seed, Purpose::Dataset, 0, 0);
    let a = DMatrix::from_fn(samples, dim, |_, _| 2.0 * rng.uniform() - 1.0);
    let b = DVector::from_fn(samples, |_, _| 2.0 * rng.uniform() - 1.0);
    make_quadratic(a, b)
}

impl LeastSquares {
    pub fn minimizer(&self) -> &ParamVector {
        &self.minimizer
    }
}

impl Problem for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn samples(&self) -> usize {
        self.a.nrows()
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        let xv = DVector::from_column_slice(x.as_slice());
        Ok((&self.a * xv - &self.b).norm_squared() / (2.0 * self.samples() as f64))
    }

    fn sample_gradient(&self, x: &ParamVector, index: usize) -> Result<ParamVector> {
        check_dim(self.dim(), x)?;
        let row = self.a.row(index);
        let r: f64 = row.iter().zip(x.as_slice()).map(|(a, x)| a * x).sum::<f64>() - self.b[index];
        Ok(ParamVector::from_raw(row.iter().map(|a| a * r).collect()))
    }

    fn full_gradient(&self, x: &ParamVector) -> Result<ParamVector> {
        check_dim(self.dim(), x)?;
        let xv = DVector::from_column_slice(x.as_slice());
        let g = self.a.transpose() * (&self.a * xv - &self.b) / self.samples() as f64;
        Ok(ParamVector::from_raw(g.iter().copied().collect()))
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn gradient_bound(&self) -> Option<f64> {
        None
    }

    fn optimal_value(&self) -> f64 {
        self.optimal_value
    }
}
