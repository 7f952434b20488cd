//! Small differentiable training problems with per-sample gradient oracles.
//!
//! Every problem is a finite-sum objective `F(x) = (1/n) sum_k l(x; xi_k)` over
//! a dataset shared by all workers, so each worker samples from the same
//! distribution.

mod dataset;
mod logistic;
mod quadratic;

use std::fmt::Debug;

pub use dataset::SyntheticDataset;
pub use logistic::{make_logistic, LogisticRegression};
pub use quadratic::{make_quadratic, make_random_quadratic, LeastSquares};

use crate::common::{ParamVector, StreamRng};
use crate::error::{Error, Result};

/// Finite-sum objective with analytic constants.
pub trait Problem: Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn samples(&self) -> usize;

    /// `F(x)`.
    fn loss(&self, x: &ParamVector) -> Result<f64>;

    /// `grad l(x; xi_index)`.
    fn sample_gradient(&self, x: &ParamVector, index: usize) -> Result<ParamVector>;

    /// `grad F(x)`, the dataset average of the sample gradients.
    fn full_gradient(&self, x: &ParamVector) -> Result<ParamVector> {
        self.minibatch_gradient(x, &Minibatch::full(self.samples()))
    }

    fn minibatch_gradient(&self, x: &ParamVector, batch: &Minibatch) -> Result<ParamVector> {
        let mut acc = ParamVector::zeros(self.dim());
        for &k in &batch.indices {
            acc.axpy(1.0, &self.sample_gradient(x, k)?)?;
        }
        Ok(acc.scale(1.0 / batch.indices.len() as f64))
    }

    /// Lipschitz constant `L` of `grad F`.
    fn smoothness(&self) -> f64;

    /// `R` such that `|grad l(x; xi)|_inf <= R - sqrt(eps)` for every `x` and
    /// sample, when such a bound exists.
    fn gradient_bound(&self) -> Option<f64>;

    /// `eps` the gradient bound was built against (0 when not applicable).
    fn bound_eps(&self) -> f64 {
        0.0
    }

    /// Optimal value `F*`.
    fn optimal_value(&self) -> f64;
}

pub(crate) fn check_dim(expected: usize, x: &ParamVector) -> Result<()> {
    if x.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// Indices of the samples drawn for one stochastic gradient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Minibatch {
    pub indices: Vec<usize>,
}

impl Minibatch {
    /// Every sample exactly once.
    pub fn full(samples: usize) -> Self {
        Self {
            indices: (0..samples).collect(),
        }
    }
}

/// Uniform with-replacement minibatch of `batch_size` samples.
pub fn minibatch(problem: &dyn Problem, rng: &mut StreamRng, batch_size: usize) -> Result<Minibatch> {
    let n = problem.samples();
    if batch_size == 0 || batch_size > n {
        return Err(Error::param(format!(
            "batch size must be in 1..={n}, got {batch_size}"
        )));
    }
    Ok(Minibatch {
        indices: (0..batch_size).map(|_| rng.index(n)).collect(),
    })
}

/// Objective that is identically zero; training on it reduces every
/// optimizer to plain gossip.
#[derive(Debug, Clone)]
pub struct ZeroObjective {
    dim: usize,
    samples: usize,
}

impl ZeroObjective {
    pub fn new(dim: usize, samples: usize) -> Result<Self> {
        if dim == 0 || samples == 0 {
            return Err(Error::param("zero objective needs positive dim and samples"));
        }
        Ok(Self { dim, samples })
    }
}

impl Problem for ZeroObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn samples(&self) -> usize {
        self.samples
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok(0.0)
    }

    fn sample_gradient(&self, x: &ParamVector, _index: usize) -> Result<ParamVector> {
        check_dim(self.dim, x)?;
        Ok(ParamVector::zeros(self.dim))
    }

    fn smoothness(&self) -> f64 {
        0.0
    }

    fn gradient_bound(&self) -> Option<f64> {
        None
    }

    fn optimal_value(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::Purpose;

    #[test]
    fn batch_size_bounds() {
        let p = ZeroObjective::new(2, 10).unwrap();
        let mut rng = StreamRng::keyed(1, Purpose::Minibatch, 0, 1);
        assert!(minibatch(&p, &mut rng, 0).is_err());
        assert!(minibatch(&p, &mut rng, 11).is_err());
        let b = minibatch(&p, &mut rng, 10).unwrap();
        assert_eq!(b.indices.len(), 10);
        assert!(b.indices.iter().all(|&k| k < 10));
    }

    #[test]
    fn keyed_minibatch_replays() {
        let p = ZeroObjective::new(2, 1000).unwrap();
        let draw = || {
            let mut rng = StreamRng::keyed(77, Purpose::Minibatch, 3, 12);
            minibatch(&p, &mut rng, 32).unwrap()
        };
        assert_eq!(draw(), draw());
    }
}
