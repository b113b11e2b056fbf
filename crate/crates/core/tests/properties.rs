mod common;

use common::*;
use nptcorr::estimators::{measure_correlator, shots_for_precision, Route, Sampling};
use nptcorr::fermion::{fermi, green_greater, green_lesser, green_retarded, ModelParams};
use nptcorr::keldysh::{expand, NestedBracket};
use nptcorr::protocol::{run_robust_exact, Bracket, ProtocolSpec};
use nptcorr::qmat::DensityMatrix;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams<f64>> {
    (0.2..3.0f64, -2.0..2.0f64, 0.0..0.5f64, 0.1..200.0f64, -3.2..3.2f64).prop_map(|(j, omega, gamma, beta, k)| ModelParams {
        j,
        omega,
        gamma,
        beta,
        k,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn channels_preserve_trace_and_hermiticity(seed in any::<u64>(), n in 1usize..=2, kraus in 1usize..=4) {
        let mut r = rng(seed);
        let ch = random_channel(&mut r, n, kraus, (0.0, 1.0));
        for _ in 0..5 {
            let rho = random_density(&mut r, n);
            let out = ch.apply_matrix(rho.matrix());
            prop_assert!((out.trace().re - 1.0).abs() < 1e-9);
            prop_assert!((&out - out.adjoint()).camax() < 1e-9);
        }
    }

    #[test]
    fn branch_probabilities_sum_to_one(seed in any::<u64>(), n_ops in 2usize..=4, bits in 0usize..8) {
        let mut r = rng(seed);
        let times: Vec<f64> = (0..n_ops).map(|k| k as f64).collect();
        let chans: Vec<_> = (0..n_ops - 1).map(|k| random_channel(&mut r, 1, 2, (k as f64, k as f64 + 1.0))).collect();
        let ops: Vec<_> = (0..n_ops).map(|_| random_hermitian_unitary(&mut r, 1)).collect();
        let brackets: Vec<_> = (0..n_ops - 1).map(|j| Bracket::BOTH[(bits >> j) & 1]).collect();
        let spec = ProtocolSpec::new(times.clone(), ops, brackets, table_factory(times[..n_ops - 1].to_vec(), chans), random_density(&mut r, 1)).unwrap();
        let table = run_robust_exact(&spec).unwrap();
        prop_assert!((table.total_probability() - 1.0).abs() < 1e-10);
        prop_assert!(table.branches().iter().all(|b| b.probability >= -1e-12 && b.expectation().abs() <= 1.0 + 1e-9));
    }

    #[test]
    fn routes_agree_in_exact_mode(seed in any::<u64>(), three in any::<bool>(), bits in 0usize..4) {
        let mut r = rng(seed);
        let n_ops = if three { 3 } else { 2 };
        let times: Vec<f64> = (0..n_ops).map(|k| 2.0 * k as f64).collect();
        let chans: Vec<_> = (0..n_ops - 1).map(|k| random_channel(&mut r, 1, 3, (times[k], times[k + 1]))).collect();
        let ops: Vec<_> = (0..n_ops).map(|_| random_pauli(&mut r, 1)).collect();
        let brackets: Vec<_> = (0..n_ops - 1).map(|j| Bracket::BOTH[(bits >> j) & 1]).collect();
        let spec = ProtocolSpec::new(times.clone(), ops, brackets, table_factory(times[..n_ops - 1].to_vec(), chans), random_density(&mut r, 1)).unwrap();
        let a = measure_correlator(&spec, Sampling::Exact, Route::ConditionalSubtraction).unwrap().value;
        let b = measure_correlator(&spec, Sampling::Exact, Route::SignedWeight).unwrap().value;
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn expansion_sizes(n in 2usize..=8, bits in any::<usize>()) {
        let b = NestedBracket::from_bits(n, bits % (1 << (n - 1))).unwrap();
        prop_assert_eq!(expand(&b).len(), 1 << (n - 1));
    }

    #[test]
    fn fermi_is_particle_hole_symmetric(p in params(), x in -50.0..50.0f64) {
        let s = fermi(&p, x) + fermi(&p, -x);
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&fermi(&p, x)));
    }

    #[test]
    fn retarded_envelope(p in params(), tp in 0.0..10.0f64, tau in 0.0..30.0f64, n in 0.0..=1.0f64) {
        let t = tp + tau;
        let g = green_retarded(&p, t, tp);
        prop_assert!((g.norm() - (-p.gamma * tau).exp()).abs() < 1e-12);
        let spectral = green_greater(&p, t, tp, n) - green_lesser(&p, t, tp, n);
        prop_assert!((spectral - g).norm() < 1e-12);
    }

    #[test]
    fn shot_counts_decrease_with_epsilon(e1 in 0.01..1.0f64, e2 in 0.01..1.0f64, conf in 0.05..0.999f64) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(shots_for_precision(lo, conf).unwrap() >= shots_for_precision(hi, conf).unwrap());
    }

    #[test]
    fn maximally_mixed_has_unit_trace(n in 1usize..=4) {
        let rho = DensityMatrix::<f64>::maximally_mixed(n);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-15);
    }
}
