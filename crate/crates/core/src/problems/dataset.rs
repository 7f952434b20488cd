use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};

use crate::common::{Purpose, StreamRng};
use crate::error::{Error, Result};

/// Binary classification data with features in `[-1, 1]^D` and labels `+-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    seed: u64,
}

impl SyntheticDataset {
    /// Draws features uniformly from `[-1, 1]^D` and labels from a logistic
    /// model around a hidden standard-normal weight vector, so the classes
    /// overlap and the logistic loss has a finite minimizer.
    pub fn generate(samples: usize, dim: usize, seed: u64) -> Result<Self> {
        if samples == 0 || dim == 0 {
            return Err(Error::param("dataset needs positive samples and dim"));
        }
        let mut rng = StreamRng::keyed(seed, Purpose::Dataset, 0, 0);
        let hidden: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut features = Vec::with_capacity(samples);
        let mut labels = Vec::with_capacity(samples);
        for _ in 0..samples {
            let a: Vec<f64> = (0..dim).map(|_| 2.0 * rng.uniform() - 1.0).collect();
            let z: f64 = a.iter().zip(&hidden).map(|(u, w)| u * w).sum();
            let p_pos = 1.0 / (1.0 + (-z).exp());
            labels.push(if rng.uniform() < p_pos { 1.0 } else { -1.0 });
            features.push(a);
        }
        Ok(Self {
            features,
            labels,
            seed,
        })
    }

    pub fn from_parts(features: Vec<Vec<f64>>, labels: Vec<f64>, seed: u64) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::param("features and labels must be non-empty and aligned"));
        }
        let dim = features[0].len();
        if dim == 0 || features.iter().any(|a| a.len() != dim) {
            return Err(Error::param("all feature rows must share a positive dimension"));
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::param(format!("labels must be +-1, found {y}")));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite feature value"));
        }
        Ok(Self {
            features,
            labels,
            seed,
        })
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn feature(&self, k: usize) -> &[f64] {
        &self.features[k]
    }

    pub fn label(&self, k: usize) -> f64 {
        self.labels[k]
    }

    pub fn max_feature_linf(&self) -> f64 {
        self.features
            .iter()
            .flatten()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// CSV with columns `label, f_1, ..., f_D`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_string()];
        header.extend((1..=self.dim()).map(|j| format!("f_{j}")));
        w.write_record(&header)?;
        for (a, y) in self.features.iter().zip(&self.labels) {
            let mut row = vec![y.to_string()];
            row.extend(a.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, seed: u64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::param(format!("bad number `{s}`: {e}")))
            };
            let mut fields = record.iter();
            let label = parse(fields.next().ok_or_else(|| Error::param("empty row"))?)?;
            labels.push(label);
            features.push(fields.map(parse).collect::<Result<Vec<_>>>()?);
        }
        Self::from_parts(features, labels, seed)
    }
}
