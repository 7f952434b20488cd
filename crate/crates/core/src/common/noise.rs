use rand_distr::{Distribution, Normal};

use super::StreamRng;
use crate::error::{Error, Result};

pub const SPEED_MIN: f64 = 0.5;
pub const SPEED_MAX: f64 = 1.5;

/// Computation-time multiplier drawn from a normal with location 1 and
/// variance `sigma2`, rejection-truncated to `[0.5, 1.5]`.
///
/// `sigma2` parameterizes the parent normal; the truncation is symmetric
/// about 1, so the mean stays 1 and the realized variance is at most `sigma2`.
pub fn sample_speed_multiplier(rng: &mut StreamRng, sigma2: f64) -> Result<f64> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::param(format!(
            "workload variance must be finite and non-negative, got {sigma2}"
        )));
    }
    if sigma2 == 0.0 {
        return Ok(1.0);
    }
    let normal = Normal::new(1.0, sigma2.sqrt()).map_err(|e| Error::param(e.to_string()))?;
    loop {
        let p = normal.sample(rng);
        if (SPEED_MIN..=SPEED_MAX).contains(&p) {
            return Ok(p);
        }
    }
}
