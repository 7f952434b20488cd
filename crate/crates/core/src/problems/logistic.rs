use nalgebra::{DMatrix, DVector};

use super::{check_dim, Minibatch, Problem, SyntheticDataset};
use crate::common::ParamVector;
use crate::error::{Error, Result};

/// Gradient-norm target for the reference minimizer.
const MINIMIZER_TOL: f64 = 1e-10;
const MAX_NEWTON_STEPS: usize = 200;

/// Logistic regression `l(x; (a, y)) = log(1 + exp(-y a^T x))`.
///
/// With `|a|_inf <= 1` each gradient coordinate is
/// `|sigma(-y a^T x) a_j| <= 1`, so `R = 1 + sqrt(eps)` bounds the stochastic
/// gradients almost surely. `L = max_k |a_k|_2^2 / 4`.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    data: SyntheticDataset,
    eps: f64,
    smoothness: f64,
    minimizer: ParamVector,
    optimal_value: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn make_logistic(data: SyntheticDataset, eps: f64) -> Result<LogisticRegression> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("eps must be positive, got {eps}")));
    }
    let linf = data.max_feature_linf();
    if linf > 1.0 {
        return Err(Error::param(format!(
            "features must lie in the unit inf-norm ball, found |a|_inf = {linf}"
        )));
    }
    let smoothness = (0..data.samples())
        .map(|k| data.feature(k).iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max)
        / 4.0;
    let mut problem = LogisticRegression {
        minimizer: ParamVector::zeros(data.dim()),
        optimal_value: 0.0,
        data,
        eps,
        smoothness,
    };
    let x = problem.newton_minimize()?;
    problem.optimal_value = problem.loss(&x)?;
    problem.minimizer = x;
    Ok(problem)
}

impl LogisticRegression {
    pub fn dataset(&self) -> &SyntheticDataset {
        &self.data
    }

    pub fn minimizer(&self) -> &ParamVector {
        &self.minimizer
    }

    fn margin(&self, x: &[f64], k: usize) -> f64 {
        self.data.label(k)
            * self
                .data
                .feature(k)
                .iter()
                .zip(x)
                .map(|(a, x)| a * x)
                .sum::<f64>()
    }

    /// Damped Newton with backtracking, run until `|grad F|_2 <= 1e-10`.
    fn newton_minimize(&self) -> Result<ParamVector> {
        let d = self.data.dim();
        let n = self.data.samples() as f64;
        let mut x = ParamVector::zeros(d);
        let mut f = self.loss(&x)?;
        for _ in 0..MAX_NEWTON_STEPS {
            let g = self.full_gradient(&x)?;
            if g.l2_norm() <= MINIMIZER_TOL {
                return Ok(x);
            }
            let mut h = DMatrix::<f64>::zeros(d, d);
            for k in 0..self.data.samples() {
                let s = sigmoid(self.margin(x.as_slice(), k));
                let w = s * (1.0 - s) / n;
                let a = DVector::from_column_slice(self.data.feature(k));
                h.ger(w, &a, &a, 1.0);
            }
            let step = h
                .cholesky()
                .ok_or_else(|| Error::InvalidSetup("singular logistic Hessian".into()))?
                .solve(&DVector::from_column_slice(g.as_slice()));
            let step = ParamVector::new(step.iter().copied().collect())?;
            let slope = -g.dot(&step)?;
            let mut t = 1.0;
            loop {
                let mut trial = x.clone();
                trial.axpy(-t, &step)?;
                let ft = self.loss(&trial)?;
                if ft <= f + 1e-4 * t * slope || t < 1e-12 {
                    x = trial;
                    f = ft;
                    break;
                }
                t *= 0.5;
            }
        }
        let g = self.full_gradient(&x)?;
        if g.l2_norm() <= MINIMIZER_TOL {
            Ok(x)
        } else {
            Err(Error::InvalidSetup(format!(
                "logistic minimizer did not converge (|grad| = {:e}); data may be separable",
                g.l2_norm()
            )))
        }
    }
}

impl Problem for LogisticRegression {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn samples(&self) -> usize {
        self.data.samples()
    }

    fn loss(&self, x: &ParamVector) -> Result<f64> {
        check_dim(self.dim(), x)?;
        let total: f64 = (0..self.samples())
            .map(|k| softplus(-self.margin(x.as_slice(), k)))
            .sum();
        Ok(total / self.samples() as f64)
    }

    fn sample_gradient(&self, x: &ParamVector, index: usize) -> Result<ParamVector> {
        check_dim(self.dim(), x)?;
        let y = self.data.label(index);
        let coef = -y * sigmoid(-self.margin(x.as_slice(), index));
        Ok(ParamVector::from_raw(
            self.data.feature(index).iter().map(|a| coef * a).collect(),
        ))
    }

    fn minibatch_gradient(&self, x: &ParamVector, batch: &Minibatch) -> Result<ParamVector> {
        check_dim(self.dim(), x)?;
        let mut acc = vec![0.0; self.dim()];
        for &k in &batch.indices {
            let coef = -self.data.label(k) * sigmoid(-self.margin(x.as_slice(), k));
            for (s, a) in acc.iter_mut().zip(self.data.feature(k)) {
                *s += coef * a;
            }
        }
        let scale = 1.0 / batch.indices.len() as f64;
        Ok(ParamVector::from_raw(acc.into_iter().map(|v| v * scale).collect()))
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn gradient_bound(&self) -> Option<f64> {
        Some(1.0 + self.eps.sqrt())
    }

    fn bound_eps(&self) -> f64 {
        self.eps
    }

    fn optimal_value(&self) -> f64 {
        self.optimal_value
    }
}
