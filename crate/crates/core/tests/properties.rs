use desklab::common::ParamVector;
use desklab::topology::{
    gossip_consensus, make_aer, make_complete, make_one_peer_exponential, make_one_peer_ring, MixingMatrix,
    MixingSchedule,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn vec_of(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-100.0f64..100.0, len)
}

fn models(n: usize, d: usize) -> impl Strategy<Value = Vec<ParamVector>> {
    proptest::collection::vec(vec_of(d), n)
        .prop_map(|vs| vs.into_iter().map(|v| ParamVector::new(v).unwrap()).collect())
}

fn schedules(n: usize) -> Vec<MixingSchedule> {
    let mut out = vec![make_complete(n).unwrap(), make_one_peer_ring(n).unwrap(), make_one_peer_exponential(n).unwrap()];
    if n >= 4 {
        out.push(make_aer(n, 2).unwrap());
    }
    out
}

fn permuted(w: &MixingMatrix, perm: &[usize]) -> MixingMatrix {
    let n = w.workers();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p[(perm[i], perm[j])] = w.weight(i, j);
        }
    }
    MixingMatrix::new(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn add_then_sub_round_trips(a in vec_of(7), b in vec_of(7)) {
        let x = ParamVector::new(a).unwrap();
        let y = ParamVector::new(b).unwrap();
        let back = x.add(&y).unwrap().sub(&y).unwrap();
        for k in 0..7 {
            prop_assert!((back[k] - x[k]).abs() <= 1e-12 * (1.0 + x[k].abs() + y[k].abs()));
        }
    }

    #[test]
    fn dot_is_symmetric_and_matches_norm(a in vec_of(9), b in vec_of(9)) {
        let x = ParamVector::new(a).unwrap();
        let y = ParamVector::new(b).unwrap();
        prop_assert_eq!(x.dot(&y).unwrap(), y.dot(&x).unwrap());
        prop_assert!((x.dot(&x).unwrap() - x.l2_norm_sq()).abs() <= 1e-9 * (1.0 + x.l2_norm_sq()));
        prop_assert!(x.linf_norm() <= x.l2_norm() + 1e-12);
    }

    #[test]
    fn weighted_sum_with_uniform_weights_is_mean(vs in models(5, 4)) {
        let w = vec![0.2; 5];
        let a = ParamVector::weighted_sum(&w, &vs).unwrap();
        let b = ParamVector::mean_of_set(&vs).unwrap();
        for k in 0..4 {
            prop_assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn gossip_preserves_the_mean(vs in models(8, 3), rounds in 1usize..12) {
        let before = ParamVector::mean_of_set(&vs).unwrap();
        for s in schedules(8) {
            let mut xs = vs.clone();
            for t in 1..=rounds {
                xs = s.matrix_at(t).mix(&xs).unwrap();
            }
            let after = ParamVector::mean_of_set(&xs).unwrap();
            for k in 0..3 {
                prop_assert!((after[k] - before[k]).abs() < 1e-10, "{}", s.kind());
            }
        }
    }

    #[test]
    fn consensus_error_never_increases(vs in models(16, 2)) {
        for s in schedules(16) {
            let c = gossip_consensus(&s, &vs, 10).unwrap();
            for w in c.errors.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12, "{}: {:?}", s.kind(), c.errors);
            }
        }
    }

    #[test]
    fn relabeling_workers_leaves_consensus_unchanged(
        vs in models(8, 3),
        perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        for s in schedules(8) {
            let rounds: Vec<MixingMatrix> = s.rounds().iter().map(|w| permuted(w, &perm)).collect();
            let relabeled = MixingSchedule::custom(rounds, 1).unwrap();
            let mut moved = vs.clone();
            for (i, v) in vs.iter().enumerate() {
                moved[perm[i]] = v.clone();
            }
            let a = gossip_consensus(&s, &vs, 6).unwrap();
            let b = gossip_consensus(&relabeled, &moved, 6).unwrap();
            for (x, y) in a.errors.iter().zip(&b.errors) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
