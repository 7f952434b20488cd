use std::io::Write;

use super::MixingSchedule;
use crate::common::ParamVector;
use crate::error::{Error, Result};

/// Normalized consensus error per gossip round; entry 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusTrajectory {
    pub errors: Vec<f64>,
}

impl ConsensusTrajectory {
    pub fn rounds(&self) -> usize {
        self.errors.len().saturating_sub(1)
    }

    /// CSV with header `round,consensus_error`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "consensus_error"])?;
        for (round, e) in self.errors.iter().enumerate() {
            w.write_record([round.to_string(), e.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `sum_i |x_i - mean|^2`.
pub(crate) fn dispersion(models: &[ParamVector], mean: &ParamVector) -> Result<f64> {
    models
        .iter()
        .map(|x| x.sub(mean).map(|d| d.l2_norm_sq()))
        .sum()
}

/// Iterates `X <- W^(t) X` for `rounds` rounds and records
/// `sum_i |x_i - mean|^2` relative to its initial value.
///
/// If the initial models already agree the trajectory is all zeros.
pub fn gossip_consensus(
    schedule: &MixingSchedule,
    initial: &[ParamVector],
    rounds: usize,
) -> Result<ConsensusTrajectory> {
    if initial.len() != schedule.workers() {
        return Err(Error::LengthMismatch {
            expected: schedule.workers(),
            found: initial.len(),
        });
    }
    let mean = ParamVector::mean_of_set(initial)?;
    let initial_dispersion = dispersion(initial, &mean)?;
    if initial_dispersion == 0.0 {
        return Ok(ConsensusTrajectory {
            errors: vec![0.0; rounds + 1],
        });
    }
    let mut errors = Vec::with_capacity(rounds + 1);
    errors.push(1.0);
    let mut models = initial.to_vec();
    for t in 1..=rounds {
        models = schedule.matrix_at(t).mix(&models)?;
        errors.push(dispersion(&models, &mean)? / initial_dispersion);
    }
    Ok(ConsensusTrajectory { errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{make_aer, make_complete};

    fn spread(n: usize, dim: usize) -> Vec<ParamVector> {
        (0..n)
            .map(|i| {
                ParamVector::new((0..dim).map(|k| ((i * 7 + k * 3) % 11) as f64).collect())
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn complete_converges_in_one_round() {
        let tr = gossip_consensus(&make_complete(8).unwrap(), &spread(8, 3), 1).unwrap();
        assert_eq!(tr.errors[0], 1.0);
        assert!(tr.errors[1] <= 1e-12);
    }

    #[test]
    fn aer_converges_in_one_cycle() {
        let tr = gossip_consensus(&make_aer(16, 4).unwrap(), &spread(16, 4), 4).unwrap();
        assert!(tr.errors[4] <= 1e-12, "{:?}", tr.errors);
        assert!(tr.errors[3] > 1e-6);
    }

    #[test]
    fn agreeing_models_give_zero_trajectory() {
        let x = vec![ParamVector::filled(3, 2.5); 4];
        let tr = gossip_consensus(&make_complete(4).unwrap(), &x, 5).unwrap();
        assert_eq!(tr.errors, vec![0.0; 6]);
    }

    #[test]
    fn csv_layout() {
        let tr = ConsensusTrajectory {
            errors: vec![1.0, 0.25],
        };
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "round,consensus_error\n0,1\n1,0.25\n"
        );
    }

    #[test]
    fn wrong_worker_count() {
        assert!(gossip_consensus(&make_complete(4).unwrap(), &spread(3, 2), 1).is_err());
    }
}
