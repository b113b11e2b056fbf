//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::DMatrix;
use nptcorr::channels::{apply_transfer, integrate_transfer_matrix, kraus_from_choi, ChoiData};
use nptcorr::estimators::{measure_correlator, shots_for_precision, Route, Sampling};
use nptcorr::fermion::{
    composed_transfer, generator, green_retarded, green_retarded_via_protocol, infinitesimal_kraus, integrated_kraus, mode_state, MapKind,
    ModelParams,
};
use nptcorr::keldysh::{accessible_permutations, evaluate_words, expand, missing_permutations, nested_bracket_matrix, NestedBracket};
use nptcorr::protocol::{
    extract_hadamard, run_hadamard_test, run_robust_exact, run_robust_exact_noisy, run_robust_sampled, run_robust_sampled_noisy,
    AncillaNoise, Bracket, ProtocolSpec,
};
use nptcorr::qmat::DensityMatrix;
use num_complex::Complex;
use rand::Rng;

type Outcome = (bool, String);

fn reference_times() -> Vec<f64> {
    (0..40).map(|k| 0.5 * k as f64).collect()
}

fn max_green_error(map: MapKind<f64>) -> (f64, Duration) {
    let p = ModelParams::default();
    let n0 = p.default_occupation();
    let start = Instant::now();
    let err = reference_times()
        .into_iter()
        .map(|t| {
            let g = green_retarded_via_protocol(&p, t, 0.0, n0, map, Sampling::Exact, Route::ConditionalSubtraction).unwrap();
            (g.estimate.value - green_retarded(&p, t, 0.0)).norm()
        })
        .fold(0.0, f64::max);
    (err, start.elapsed())
}

fn reference_exact() -> Outcome {
    let (integrated, t_int) = max_green_error(MapKind::Integrated);
    let (trotter, t_trot) = max_green_error(MapKind::Trotter { dt: 0.05 });
    let ok = integrated <= 1e-4 && trotter <= 5e-3 && t_int.as_secs_f64() <= 10.0;
    (
        ok,
        format!(
            "40 points, max |err| integrated {integrated:.2e} (<= 1e-4, {:.2} s), Trotter dt=0.05 {trotter:.2e} (<= 5e-3, {:.2} s)",
            t_int.as_secs_f64(),
            t_trot.as_secs_f64()
        ),
    )
}

fn reference_sampled() -> Outcome {
    let p = ModelParams::default();
    let n0 = p.default_occupation();
    let start = Instant::now();
    let mut inside = 0;
    let mut region = (0, 0);
    let times = reference_times();
    for (k, &t) in times.iter().enumerate() {
        let sampling = Sampling::Shots { shots: 10_000, seed: 4000 + k as u64 };
        let g = green_retarded_via_protocol(&p, t, 0.0, n0, MapKind::Integrated, sampling, Route::ConditionalSubtraction).unwrap().estimate;
        let exact = green_retarded(&p, t, 0.0);
        let ok =
            (g.value.re - exact.re).abs() <= 3.0 * g.std_error.re + 1e-12 && (g.value.im - exact.im).abs() <= 3.0 * g.std_error.im + 1e-12;
        inside += ok as usize;
        if (10.0..=19.0).contains(&t) {
            region.0 += ok as usize;
            region.1 += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let frac = inside as f64 / times.len() as f64;
    (
        frac >= 0.95 && elapsed <= 300.0,
        format!(
            "{inside}/{} points within 3 sigma ({:.1}%), t in [10, 19]: {}/{}, 1e4 shots per circuit, {elapsed:.1} s",
            times.len(),
            100.0 * frac,
            region.0,
            region.1
        ),
    )
}

fn envelope() -> Outcome {
    let mut r = rng(500);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p: ModelParams<f64> = ModelParams {
            j: r.random_range(0.5..2.0),
            omega: r.random_range(0.0..2.0),
            gamma: r.random_range(0.0..0.3),
            beta: r.random_range(0.5..100.0),
            k: r.random_range(-3.1..3.1),
        };
        let tp = r.random_range(0.0..5.0);
        let t = tp + r.random_range(0.0..10.0);
        let n_ref = r.random_range(0.0..1.0);
        let g = green_retarded_via_protocol(&p, t, tp, n_ref, MapKind::Integrated, Sampling::Exact, Route::ConditionalSubtraction)
            .unwrap()
            .estimate
            .value;
        worst = worst.max((g.norm() - (-p.gamma * (t - tp)).exp()).abs());
    }
    (worst <= 1e-6, format!("100 parameter draws, max ||G^R| - e^(-Gamma tau)| = {worst:.2e} (<= 1e-6)"))
}

fn two_point_oracle_check() -> Outcome {
    let mut r = rng(501);
    let p = ModelParams::default();
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = if case % 5 == 4 { 2 } else { 1 };
        let rho = random_density(&mut r, n);
        let (o1, o2) = (random_pauli(&mut r, n), random_pauli(&mut r, n));
        let (t1, t2) = (r.random_range(0.0..3.0), r.random_range(3.0..8.0));
        let v = if case % 2 == 0 && n == 1 {
            integrated_kraus(&p, t1, t2, r.random_range(0.0..1.0)).unwrap().channel
        } else {
            random_channel(&mut r, n, 1 + case % 4, (t1, t2))
        };
        let b = Bracket::BOTH[(case / 2) % 2];
        let spec =
            ProtocolSpec::new(vec![t1, t2], vec![o1.clone(), o2.clone()], vec![b], table_factory(vec![t1], vec![v.clone()]), rho.clone())
                .unwrap();
        let est = measure_correlator(&spec, Sampling::Exact, Route::ConditionalSubtraction).unwrap().value;
        worst = worst.max((est - two_point_oracle(rho.matrix(), o1.matrix(), &v, o2.matrix(), b)).norm());
    }
    (worst <= 1e-10, format!("50 instances, max |conditional subtraction - trace oracle| = {worst:.2e} (<= 1e-10)"))
}

fn three_point_oracle_check() -> Outcome {
    let mut r = rng(502);
    let p = ModelParams::default();
    let mut worst: f64 = 0.0;
    for case in 0..25 {
        let rho = random_density(&mut r, 1);
        let ops: Vec<_> = (0..3).map(|_| random_hermitian_unitary(&mut r, 1)).collect();
        let times = vec![0.0, r.random_range(0.5..3.0), r.random_range(3.0..6.0)];
        let (v21, v32) = if case % 2 == 0 {
            (integrated_kraus(&p, times[0], times[1], 0.3).unwrap().channel, integrated_kraus(&p, times[1], times[2], 0.3).unwrap().channel)
        } else {
            (random_channel(&mut r, 1, 2, (times[0], times[1])), random_channel(&mut r, 1, 3, (times[1], times[2])))
        };
        let factory = table_factory(times[..2].to_vec(), vec![v21.clone(), v32.clone()]);
        for b1 in Bracket::BOTH {
            for b2 in Bracket::BOTH {
                let spec = ProtocolSpec::new(times.clone(), ops.clone(), vec![b1, b2], factory.clone(), rho.clone()).unwrap();
                let est = measure_correlator(&spec, Sampling::Exact, Route::ConditionalSubtraction).unwrap().value;
                let oracle = three_point_oracle(rho.matrix(), [ops[0].matrix(), ops[1].matrix(), ops[2].matrix()], &v21, &v32, [b1, b2]);
                worst = worst.max((est - oracle).norm());
            }
        }
    }
    (worst <= 1e-9, format!("25 instances x 4 bracket choices, max |estimate - nested traces| = {worst:.2e} (<= 1e-9)"))
}

fn hadamard_contrast() -> Outcome {
    let p = ModelParams::default();
    let rho = mode_state(p.default_occupation()).unwrap();
    let (t1, t2) = (1.0, 3.5);
    let factory = table_factory(vec![t1], vec![integrated_kraus(&p, t1, t2, 0.3).unwrap().channel]);
    let mut worst_damping: f64 = 0.0;
    let mut robust_identical = true;
    for gamma_a in [0.1, 0.5, 1.0, 3.0] {
        let noise = AncillaNoise::new(gamma_a).unwrap();
        for b in Bracket::BOTH {
            for (o1, o2) in [("X", "X"), ("X", "Y"), ("Z", "Z")] {
                let spec = ProtocolSpec::new(vec![t1, t2], vec![pauli(o1), pauli(o2)], vec![b], factory.clone(), rho.clone()).unwrap();
                let clean = run_hadamard_test(&spec, &AncillaNoise::NONE).unwrap();
                let noisy = run_hadamard_test(&spec, &noise).unwrap();
                let c0 = extract_hadamard(b.alpha(), clean.z, clean.y);
                let c1 = extract_hadamard(b.alpha(), noisy.z, noisy.y);
                worst_damping = worst_damping.max((c1 - c0 * (-gamma_a * (t2 - t1)).exp()).norm());
                robust_identical &= run_robust_exact(&spec).unwrap() == run_robust_exact_noisy(&spec, &noise).unwrap();
                robust_identical &= run_robust_sampled(&spec, 500, 9).unwrap() == run_robust_sampled_noisy(&spec, 500, 9, &noise).unwrap();
            }
        }
    }
    (
        worst_damping <= 1e-9 && robust_identical,
        format!(
            "Hadamard damping deviation {worst_damping:.2e} (<= 1e-9); robust branch tables and shot records bitwise identical: {robust_identical}"
        ),
    )
}

fn shot_scaling() -> Outcome {
    let p = ModelParams::default();
    let factory = table_factory(vec![0.0], vec![integrated_kraus(&p, 0.0, 2.0, 0.3).unwrap().channel]);
    let spec =
        ProtocolSpec::new(vec![0.0, 2.0], vec![pauli("X"), pauli("X")], vec![Bracket::Anticommutator], factory, mode_state(0.3).unwrap())
            .unwrap();
    let pts: Vec<(f64, f64)> = [100usize, 1_000, 10_000, 100_000]
        .iter()
        .map(|&n| {
            let e = measure_correlator(&spec, Sampling::Shots { shots: n, seed: 77 }, Route::ConditionalSubtraction).unwrap();
            ((n as f64).ln(), e.std_error.re.ln())
        })
        .collect();
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let mut ratio_ok = true;
    let mut ratios = Vec::new();
    for eps in [0.2, 0.1, 0.05, 0.01] {
        let (a, b) = (shots_for_precision(eps, 0.95).unwrap(), shots_for_precision(eps / 2.0, 0.95).unwrap());
        let ratio = b as f64 / a as f64;
        ratio_ok &= (b as i64 - 4 * a as i64).abs() <= 4;
        ratios.push(format!("{ratio:.3}"));
    }
    (
        (slope + 0.5).abs() <= 0.05 && ratio_ok,
        format!("std-error slope {slope:.4} (-0.5 +- 0.05); Hoeffding eps/2 ratios [{}]", ratios.join(", ")),
    )
}

fn keldysh() -> Outcome {
    let acc3 = accessible_permutations(3).unwrap();
    let expected_acc = [vec![0, 1, 2], vec![0, 2, 1], vec![1, 2, 0], vec![2, 1, 0]];
    let expected_missing = vec![vec![1, 0, 2], vec![2, 0, 1]];
    let sets_ok = acc3.iter().cloned().collect::<Vec<_>>() == expected_acc && missing_permutations(3).unwrap() == expected_missing;
    let counts: Vec<usize> = (2..=6).map(|n| accessible_permutations(n).unwrap().len()).collect();
    let counts_ok = counts.iter().zip(2..=6).all(|(&c, n)| c == 1 << (n - 1));
    let mut r = rng(503);
    let mut worst: f64 = 0.0;
    for n in 2..=6 {
        let ops: Vec<DMatrix<Complex<f64>>> =
            (0..n).map(|_| DMatrix::from_fn(3, 3, |_, _| Complex::new(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)))).collect();
        for b in NestedBracket::all(n).unwrap() {
            worst = worst.max((nested_bracket_matrix(&b, &ops) - evaluate_words(&expand(&b), &ops)).camax());
        }
    }
    (
        sets_ok && counts_ok && worst <= 1e-12,
        format!("n=3 sets match: {sets_ok}; |accessible(n)| for n=2..6 = {counts:?}; substitution error {worst:.2e} (<= 1e-12)"),
    )
}

fn channel_pipeline() -> Outcome {
    let mut r = rng(504);
    let mut completeness: f64 = 0.0;
    for _ in 0..50 {
        let p: ModelParams<f64> = ModelParams {
            j: r.random_range(0.5..2.0),
            omega: r.random_range(0.0..2.0),
            gamma: r.random_range(0.0..0.5),
            beta: r.random_range(0.5..100.0),
            k: r.random_range(-3.1..3.1),
        };
        completeness = completeness.max(infinitesimal_kraus(&p, r.random_range(0.0..10.0), 1e-3).unwrap().completeness_defect());
    }
    let p = ModelParams::default();
    let mut composed_err: f64 = 0.0;
    for start in [0.0, 3.3, 9.0, 15.5] {
        let map = integrated_kraus(&p, start, start + 1.0, p.default_occupation()).unwrap();
        let composed = composed_transfer(&p, start, start + 1.0, 1000).unwrap();
        for k in 0..4 {
            let basis = pauli(["I", "X", "Y", "Z"][k]).into_matrix() * Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let via_map = map.channel.apply_matrix(&basis);
            let via_steps = apply_transfer_matrix(&composed, &basis);
            composed_err = composed_err.max((via_map - via_steps).camax());
        }
    }
    let mut roundtrip: f64 = 0.0;
    for _ in 0..20 {
        let ch = random_channel(&mut r, 1, 3, (0.0, 1.0));
        let back = kraus_from_choi(&ChoiData::of_channel(&ch).unwrap()).unwrap();
        roundtrip = roundtrip.max(ch.action_distance(&back).unwrap());
    }
    let gen_rt = {
        let data = integrate_transfer_matrix(&generator(&p), 0.0, 2.0, 2000).unwrap();
        let ch = kraus_from_choi(&data).unwrap();
        let rho: DensityMatrix<f64> = mode_state(0.4).unwrap();
        (ch.apply(&rho).unwrap().into_matrix() - apply_transfer(data.transfer(), &rho).unwrap()).camax()
    };
    roundtrip = roundtrip.max(gen_rt);
    (
        completeness <= 1e-14 && composed_err <= 1e-5 && roundtrip <= 1e-8,
        format!(
            "infinitesimal completeness {completeness:.1e}; integrated vs 1e3 composed steps {composed_err:.2e} (<= 1e-5); Choi->Kraus round trip {roundtrip:.2e} (<= 1e-8)"
        ),
    )
}

/// Transfer matrix acting on an arbitrary operator in the normalized Pauli
/// basis.
fn apply_transfer_matrix(f: &DMatrix<Complex<f64>>, m: &DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let basis: Vec<_> = ["I", "X", "Y", "Z"].iter().map(|l| pauli(l).into_matrix() * Complex::new(s, 0.0)).collect();
    let coords: Vec<Complex<f64>> = basis.iter().map(|b| (b * m).trace()).collect();
    let mut out = DMatrix::zeros(2, 2);
    for (r, br) in basis.iter().enumerate() {
        let c: Complex<f64> = (0..4).map(|s| f[(r, s)] * coords[s]).sum();
        out += br * c;
    }
    out
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("green-exact", reference_exact),
        ("green-sampled", reference_sampled),
        ("envelope", envelope),
        ("two-point-oracle", two_point_oracle_check),
        ("three-point-oracle", three_point_oracle_check),
        ("hadamard-contrast", hadamard_contrast),
        ("shot-scaling", shot_scaling),
        ("keldysh-accessibility", keldysh),
        ("channel-pipeline", channel_pipeline),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let (ok, detail) = run();
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        failed += !ok as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
