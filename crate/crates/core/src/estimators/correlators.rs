use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::aux::{derived_seed, mean_and_variance};
use super::{
    bracket_phase, estimate_aux_exact, estimate_aux_sampled, AuxData, AuxQuantity, AuxiliaryPlan, CorrelatorEstimate, EstimateFlag,
    MainData, Method,
};
use crate::error::{Error, Result};
use crate::protocol::{extract_hadamard, run_robust_exact, run_robust_sampled, Bracket, HadamardExpectations, ProtocolSpec};
use crate::scalar::{Real, C};

/// One weighted observation of the main circuit: a branch with its exact
/// conditional expectation, or a single shot with weight `1/N`.
struct Point<T> {
    weight: T,
    outcomes: Vec<u8>,
    value: T,
}

fn points<T: Real>(main: MainData<'_, T>, controls: usize) -> Result<Vec<Point<T>>> {
    let pts: Vec<Point<T>> = match main {
        MainData::Exact(table) => {
            table.branches().iter().map(|b| Point { weight: b.probability, outcomes: b.outcomes.clone(), value: b.expectation() }).collect()
        }
        MainData::Sampled(shots) => {
            if shots.is_empty() {
                return Err(Error::InvalidArgument("no shots in main data".into()));
            }
            let w = T::one() / T::from_usize(shots.len()).unwrap();
            shots.iter().map(|s| Point { weight: w, outcomes: s.outcomes.clone(), value: T::lit(s.final_value as f64) }).collect()
        }
    };
    if let Some(p) = pts.iter().find(|p| p.outcomes.len() != controls) {
        return Err(Error::InvalidSpec(format!("expected {controls} outcomes per record, found {}", p.outcomes.len())));
    }
    Ok(pts)
}

fn empty_branches(main: MainData<'_, impl Real>, controls: usize) -> Vec<EstimateFlag> {
    let MainData::Sampled(shots) = main else { return Vec::new() };
    (0..1usize << controls)
        .map(|bits| (0..controls).map(|j| ((bits >> (controls - 1 - j)) & 1) as u8).collect::<Vec<u8>>())
        .filter(|m| !shots.iter().any(|s| &s.outcomes == m))
        .map(|outcomes| EstimateFlag::EmptyBranch { outcomes })
        .collect()
}

fn sign<T: Real>(m: u8) -> T {
    if m == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Real estimate `sum_points w g(m, f, aux)` with its variance of the mean.
///
/// Main-circuit scatter enters through the sample variance of `g`; each
/// auxiliary value contributes `(dg/da)^2 var(a)` with the derivative taken by
/// central differences.
fn evaluate<T: Real>(pts: &[Point<T>], sampled: bool, aux: &[super::AuxValue<T>], g: impl Fn(&[u8], T, &[T]) -> T) -> (T, T) {
    let values: Vec<T> = aux.iter().map(|a| a.value).collect();
    let mean_at = |vals: &[T]| pts.iter().fold(T::zero(), |acc, p| acc + p.weight * g(&p.outcomes, p.value, vals));
    let value = mean_at(&values);
    let mut var = T::zero();
    if sampled {
        let per_shot: Vec<f64> = pts.iter().map(|p| g(&p.outcomes, p.value, &values).to_f64_lossy()).collect();
        let (_, v) = mean_and_variance(&per_shot);
        var += T::lit(v / per_shot.len() as f64);
    }
    for (j, a) in aux.iter().enumerate() {
        let av = a.mean_variance();
        if av == T::zero() {
            continue;
        }
        let h = T::lit(1e-5) * (T::one() + a.value.abs());
        let mut up = values.clone();
        let mut down = values.clone();
        up[j] += h;
        down[j] -= h;
        let d = (mean_at(&up) - mean_at(&down)) / (T::lit(2.0) * h);
        var += d * d * av;
    }
    (value, var)
}

fn lookup<T: Real>(aux: &AuxData<T>, keys: &[AuxQuantity]) -> Result<Vec<super::AuxValue<T>>> {
    keys.iter().map(|k| aux.get(k).copied()).collect()
}

fn shots_of<T>(main: MainData<'_, T>) -> usize {
    match main {
        MainData::Exact(_) => 0,
        MainData::Sampled(s) => s.len(),
    }
}

fn method_for<T: Real>(main: MainData<'_, T>, aux: &[super::AuxValue<T>], route: Method) -> Method {
    if main.is_exact() && aux.iter().all(|a| a.shots == 0) {
        Method::Exact
    } else {
        route
    }
}

/// `Re(i^alpha x)` for real `x`.
fn rotate<T: Real>(bracket: Bracket, x: T) -> T {
    match bracket {
        Bracket::Anticommutator => x,
        Bracket::Commutator => T::zero(),
    }
}

/// Two-point bracket `<[O_1(t_1), O_2(t_2)]_±>` by conditional subtraction.
///
/// Branch `m` occurs with probability `Z(m)/4`, `Z = 2 + 2 s Re(i^α <O_1>)`,
/// and its conditional mean satisfies `Z e(m) = R + s X` with the remainder
/// `R = <O_2> + <O_2>_{O_1}`. Each shot contributes `s (Z f - R)`.
pub fn estimate_two_point<T: Real>(main: MainData<'_, T>, aux: &AuxData<T>, bracket: Bracket) -> Result<CorrelatorEstimate<T>> {
    let plan = AuxiliaryPlan::two_point();
    let keys: Vec<_> = plan.entries().cloned().collect();
    let av = lookup(aux, &keys)?;
    let pts = points(main, 1)?;
    let two = T::lit(2.0);
    let g = |m: &[u8], f: T, a: &[T]| {
        let s = sign::<T>(m[0]);
        let z = two + two * s * rotate(bracket, a[0]);
        s * (z * f - a[1] - a[2])
    };
    let (x, var) = evaluate(&pts, !main.is_exact(), &av, g);
    let shots = shots_of(main) + av.iter().map(|a| a.shots).sum::<usize>();
    Ok(CorrelatorEstimate::from_real(
        x,
        var,
        bracket_phase(&[bracket]),
        shots,
        method_for(main, &av, Method::ConditionalSubtraction),
        empty_branches(main, 1),
    ))
}

/// Three-point bracket `<[O_1, [O_2, O_3]_±]_±>` by conditional subtraction
/// of the twelve remainder terms.
///
/// With `T_1 = 2 + 2 s_1 Re(i^α_1 <O_1>)` and
/// `T_2 = <O_2> + <O_2>_{O_1} + s_1 X_12`, branch `(m_1, m_2)` has
/// probability `Z/16`, `Z = 2 T_1 + 2 s_2 Re(i^α_2 T_2)`, and
/// `Z e = A + s_1 B + s_2 B' + s_1 s_2 C`.
pub fn estimate_three_point<T: Real>(main: MainData<'_, T>, aux: &AuxData<T>, brackets: [Bracket; 2]) -> Result<CorrelatorEstimate<T>> {
    let plan = AuxiliaryPlan::three_point();
    let keys: Vec<_> = plan.entries().cloned().collect();
    let av = lookup(aux, &keys)?;
    let pts = points(main, 2)?;
    let two = T::lit(2.0);
    let g = |m: &[u8], f: T, a: &[T]| {
        let (s1, s2) = (sign::<T>(m[0]), sign::<T>(m[1]));
        let t1 = two + two * s1 * rotate(brackets[0], a[0]);
        let t2 = a[1] + a[2] + s1 * a[3];
        let z = two * t1 + two * s2 * rotate(brackets[1], t2);
        let big_a = a[4] + a[5] + a[6] + a[7];
        let b1 = a[8] + a[9];
        let b2 = a[10] + a[11];
        s1 * s2 * (z * f - big_a - s1 * b1 - s2 * b2)
    };
    let (x, var) = evaluate(&pts, !main.is_exact(), &av, g);
    let shots = shots_of(main) + av.iter().map(|a| a.shots).sum::<usize>();
    Ok(CorrelatorEstimate::from_real(
        x,
        var,
        bracket_phase(&brackets),
        shots,
        method_for(main, &av, Method::ConditionalSubtraction),
        empty_branches(main, 2),
    ))
}

/// Nested bracket from the signed average `2^k E[(-1)^{|m|} f]` over a main
/// run with `k = brackets.len()` controls. Needs no auxiliary circuits.
pub fn estimate_signed<T: Real>(main: MainData<'_, T>, brackets: &[Bracket]) -> Result<CorrelatorEstimate<T>> {
    let k = brackets.len();
    let pts = points(main, k)?;
    let scale = T::lit((1u64 << k) as f64);
    let g = |m: &[u8], f: T, _: &[T]| {
        let parity = m.iter().map(|&b| b as u32).sum::<u32>();
        scale * sign::<T>((parity % 2) as u8) * f
    };
    let (x, var) = evaluate(&pts, !main.is_exact(), &[], g);
    let method = if main.is_exact() { Method::Exact } else { Method::SignedWeight };
    Ok(CorrelatorEstimate::from_real(x, var, bracket_phase(brackets), shots_of(main), method, empty_branches(main, k)))
}

pub fn estimate_two_point_signed<T: Real>(main: MainData<'_, T>, bracket: Bracket) -> Result<CorrelatorEstimate<T>> {
    estimate_signed(main, &[bracket])
}

/// `<O_2(t_2) O_1(t_1)>` from exact Hadamard-test expectations.
pub fn estimate_hadamard_exact<T: Real>(e: &HadamardExpectations<T>, alpha: u8) -> CorrelatorEstimate<T> {
    CorrelatorEstimate {
        value: extract_hadamard(alpha, e.z, e.y),
        std_error: C::new(T::zero(), T::zero()),
        shots_used: 0,
        method: Method::Exact,
        flags: Vec::new(),
    }
}

/// `<O_2(t_2) O_1(t_1)>` from sampled ancilla `Z` and `Y` readouts.
pub fn estimate_hadamard_sampled<T: Real>(z: &[i8], y: &[i8], alpha: u8) -> Result<CorrelatorEstimate<T>> {
    if z.is_empty() || y.is_empty() {
        return Err(Error::InvalidArgument("Hadamard estimate needs shots in both bases".into()));
    }
    let stats = |xs: &[i8]| {
        let v: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        let (m, var) = mean_and_variance(&v);
        (T::lit(m), T::lit((var / v.len() as f64).sqrt()))
    };
    let ((mz, sz), (my, sy)) = (stats(z), stats(y));
    let std_error = if alpha == 0 { C::new(sz, sy) } else { C::new(sy, sz) };
    Ok(CorrelatorEstimate {
        value: extract_hadamard(alpha, mz, my),
        std_error,
        shots_used: z.len() + y.len(),
        method: Method::HadamardTest,
        flags: Vec::new(),
    })
}

/// How main and auxiliary circuits are run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Exact,
    /// `shots` per circuit; auxiliary circuits get seeds derived from `seed`.
    Shots {
        shots: usize,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ConditionalSubtraction,
    SignedWeight,
}

/// Runs the main circuit (and the auxiliary plan for conditional
/// subtraction) and estimates the spec's nested bracket.
pub fn measure_correlator<T: Real>(spec: &ProtocolSpec<T>, sampling: Sampling, route: Route) -> Result<CorrelatorEstimate<T>> {
    let brackets = spec.brackets();
    let table;
    let shots;
    let main = match sampling {
        Sampling::Exact => {
            table = run_robust_exact(spec)?;
            MainData::Exact(&table)
        }
        Sampling::Shots { shots: n, seed } => {
            shots = run_robust_sampled(spec, n, seed)?;
            MainData::Sampled(&shots)
        }
    };
    match route {
        Route::SignedWeight => estimate_signed(main, brackets),
        Route::ConditionalSubtraction => {
            let plan = AuxiliaryPlan::for_order(spec.n())?;
            let aux = match sampling {
                Sampling::Exact => estimate_aux_exact(spec, &plan)?,
                Sampling::Shots { shots, seed } => estimate_aux_sampled(spec, &plan, shots, derived_seed(seed, 0))?,
            };
            match spec.n() {
                2 => estimate_two_point(main, &aux, brackets[0]),
                _ => estimate_three_point(main, &aux, [brackets[0], brackets[1]]),
            }
        }
    }
}

/// Nested bracket of an `n = 2` or `n = 3` spec evaluated directly from the
/// channels by matrix algebra, with no circuit simulation.
pub fn reference_bracket<T: Real>(spec: &ProtocolSpec<T>) -> Result<C<T>> {
    let chans = spec.circuit().channels()?;
    let apply = |k: usize, m: DMatrix<C<T>>| match &chans[k] {
        Some(ch) => ch.apply_matrix(&m),
        None => m,
    };
    let rho = spec.initial_state().matrix();
    let o: Vec<&DMatrix<C<T>>> = spec.ops().iter().map(|op| op.matrix()).collect();
    let sign = |b: Bracket| C::new(T::from_i8(b.sign()).unwrap(), T::zero());
    let b = spec.brackets();
    match spec.n() {
        2 => {
            let forward = (o[1] * apply(0, o[0] * rho)).trace();
            let backward = (o[1] * apply(0, rho * o[0])).trace();
            Ok(backward + forward * sign(b[0]))
        }
        3 => {
            let w321 = (o[2] * apply(1, o[1] * apply(0, o[0] * rho))).trace();
            let w132 = (o[2] * apply(1, o[1] * apply(0, rho * o[0]))).trace();
            Ok(w321.conj() + w132 * sign(b[1]) + w132.conj() * sign(b[0]) + w321 * sign(b[0]) * sign(b[1]))
        }
        n => Err(Error::InvalidArgument(format!("reference bracket implemented for n = 2, 3, got {n}"))),
    }
}
