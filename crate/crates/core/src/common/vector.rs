use std::ops::Index;

use crate::error::{Error, Result};

/// Dense real parameter vector of fixed length.
///
/// Binary operations require equal lengths and report a
/// [`Error::LengthMismatch`] otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    /// Wraps `values`, rejecting NaN and infinite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite entry {} at index {pos}",
                values[pos]
            )));
        }
        Ok(Self(values))
    }

    /// Wraps `values` without the finiteness check; callers that can overflow
    /// are responsible for checking [`ParamVector::is_finite`].
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn filled(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    fn check_len(&self, other: &ParamVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &ParamVector, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn add(&self, other: &ParamVector) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ParamVector) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &ParamVector) -> Result<()> {
        self.check_len(x)?;
        for (s, &v) in self.0.iter_mut().zip(&x.0) {
            *s += alpha * v;
        }
        Ok(())
    }

    /// Elementwise square.
    pub fn hadamard_square(&self) -> Self {
        Self(self.0.iter().map(|v| v * v).collect())
    }

    /// Elementwise `self / (sqrt(denominator) + eps)`.
    pub fn div_sqrt_plus_eps(&self, denominator: &ParamVector, eps: f64) -> Result<Self> {
        self.zip_with(denominator, |n, d| n / (d.sqrt() + eps))
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        self.check_len(other)?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Arithmetic mean of a non-empty set of equal-length vectors.
    pub fn mean_of_set(vectors: &[ParamVector]) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::param("mean of an empty set"))?;
        let mut acc = ParamVector::zeros(first.len());
        for v in vectors {
            acc.axpy(1.0, v)?;
        }
        Ok(acc.scale(1.0 / vectors.len() as f64))
    }

    /// `sum_j weights[j] * vectors[j]`, skipping zero weights.
    pub fn weighted_sum(weights: &[f64], vectors: &[ParamVector]) -> Result<Self> {
        if weights.len() != vectors.len() {
            return Err(Error::LengthMismatch {
                expected: vectors.len(),
                found: weights.len(),
            });
        }
        let first = vectors
            .first()
            .ok_or_else(|| Error::param("weighted sum of an empty set"))?;
        let mut acc = ParamVector::zeros(first.len());
        for (&w, v) in weights.iter().zip(vectors) {
            if w != 0.0 {
                acc.axpy(w, v)?;
            }
        }
        Ok(acc)
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
