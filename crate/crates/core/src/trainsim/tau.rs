use crate::common::StreamRng;
use crate::error::{Error, Result};

/// `P[tau = k] proportional to 1 - beta1^(T - k)` for `k` in `0..T`.
pub fn tau_distribution(iterations: usize, beta1: f64) -> Result<Vec<f64>> {
    if iterations == 0 {
        return Err(Error::param("tau needs T >= 1"));
    }
    if !(0.0..1.0).contains(&beta1) {
        return Err(Error::param(format!("beta1 must lie in [0, 1), got {beta1}")));
    }
    let weights: Vec<f64> = (0..iterations)
        .map(|k| 1.0 - beta1.powf((iterations - k) as f64))
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Draws the random stopping index `tau` in `0..T`.
pub fn sample_tau(iterations: usize, beta1: f64, rng: &mut StreamRng) -> Result<usize> {
    let probs = tau_distribution(iterations, beta1)?;
    let u = rng.uniform();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(k);
        }
    }
    Ok(iterations - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::Purpose;

    #[test]
    fn no_momentum_is_uniform() {
        let p = tau_distribution(5, 0.0).unwrap();
        assert!(p.iter().all(|&q| (q - 0.2).abs() < 1e-15));
    }

    #[test]
    fn two_step_hand_normalization() {
        let p = tau_distribution(2, 0.5).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn probabilities_sum_to_one() {
        for t in [1, 2, 7, 100, 5000] {
            for b in [0.0, 0.3, 0.9, 0.999] {
                let s: f64 = tau_distribution(t, b).unwrap().iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "T={t} beta1={b}");
            }
        }
    }

    #[test]
    fn sampling_frequencies() {
        let mut rng = StreamRng::keyed(3, Purpose::Tau, 0, 0);
        let mut counts = [0usize; 2];
        for _ in 0..100_000 {
            counts[sample_tau(2, 0.5, &mut rng).unwrap()] += 1;
        }
        // P = 0.6; sd of the count ~ 155
        assert!((counts[0] as i64 - 60_000).abs() < 800, "{counts:?}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(tau_distribution(0, 0.5).is_err());
        assert!(tau_distribution(3, 1.0).is_err());
    }
}
