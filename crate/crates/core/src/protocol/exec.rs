use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step::{branch_probability, step_kraus};
use super::{Action, AncillaNoise, Circuit, ProtocolSpec};
use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::qmat::{hermitize, trace_product};
use crate::scalar::{re, Real, C};

/// One sampled run of a circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// Ancilla outcomes in circuit order.
    pub outcomes: Vec<u8>,
    /// Eigenvalue (+1 or -1) of the final measurement.
    pub final_value: i8,
    pub seed_index: u64,
}

impl ShotRecord {
    /// `(-1)^(m_1 + ... + m_k)`.
    pub fn outcome_sign(&self) -> i8 {
        if self.outcomes.iter().map(|&m| m as u32).sum::<u32>() % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Exact probability and final-measurement weight of one outcome string.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch<T> {
    pub outcomes: Vec<u8>,
    pub probability: T,
    /// `Tr(O_n rho_m)` for the unnormalized branch state, i.e. `p(m) e(m)`.
    pub weighted: T,
}

impl<T: Real> Branch<T> {
    /// Conditional expectation `e(m)`; zero for branches that never occur.
    pub fn expectation(&self) -> T {
        if self.probability > T::zero() {
            self.weighted / self.probability
        } else {
            T::zero()
        }
    }
}

/// All `2^k` outcome strings of a circuit with `k` controlled steps.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchTable<T> {
    branches: Vec<Branch<T>>,
}

impl<T: Real> BranchTable<T> {
    pub fn branches(&self) -> &[Branch<T>] {
        &self.branches
    }

    pub fn get(&self, outcomes: &[u8]) -> Option<&Branch<T>> {
        self.branches.iter().find(|b| b.outcomes == outcomes)
    }

    pub fn total_probability(&self) -> T {
        self.branches.iter().fold(T::zero(), |acc, b| acc + b.probability)
    }

    /// Unconditional mean of the final measurement.
    pub fn mean_final(&self) -> T {
        self.branches.iter().fold(T::zero(), |acc, b| acc + b.weighted)
    }

    /// `sum_m (-1)^{|m|} p(m) e(m)`.
    pub fn signed_mean(&self) -> T {
        self.branches.iter().fold(T::zero(), |acc, b| {
            let odd = b.outcomes.iter().map(|&m| m as u32).sum::<u32>() % 2 == 1;
            if odd {
                acc - b.weighted
            } else {
                acc + b.weighted
            }
        })
    }
}

/// Per-control Kraus pairs, precomputed once per circuit.
fn control_kraus<T: Real>(circuit: &Circuit<T>) -> Vec<Option<[DMatrix<C<T>>; 2]>> {
    circuit
        .actions()
        .iter()
        .map(|a| match a {
            Action::Control { op, bracket } => Some(step_kraus(op, *bracket)),
            _ => None,
        })
        .collect()
}

fn ancilla_channels<T: Real>(circuit: &Circuit<T>, noise: &AncillaNoise) -> Result<Vec<QuantumChannel<T>>> {
    circuit.times().windows(2).map(|w| noise.channel(w[0], w[1])).collect()
}

struct Path<T: Real> {
    outcomes: Vec<u8>,
    state: DMatrix<C<T>>,
    /// Measured ancilla between its measurement and the next reset.
    idle_ancilla: Option<DMatrix<C<T>>>,
}

/// Exact branch enumeration with a noiseless ancilla.
pub fn run_circuit_exact<T: Real>(circuit: &Circuit<T>) -> Result<BranchTable<T>> {
    run_circuit_exact_noisy(circuit, &AncillaNoise::NONE)
}

/// Exact branch enumeration; the measured ancilla dephases at the given
/// rate while the system evolves and is then reset.
pub fn run_circuit_exact_noisy<T: Real>(circuit: &Circuit<T>, noise: &AncillaNoise) -> Result<BranchTable<T>> {
    let channels = circuit.channels()?;
    let ancilla = ancilla_channels(circuit, noise)?;
    let kraus = control_kraus(circuit);
    let mut paths = vec![Path { outcomes: Vec::new(), state: circuit.initial_state().matrix().clone(), idle_ancilla: None }];
    for (j, action) in circuit.actions().iter().enumerate() {
        paths = match (action, &kraus[j]) {
            (Action::Control { .. }, Some(pair)) => paths
                .into_iter()
                .flat_map(|path| {
                    pair.iter().enumerate().map(move |(m, k)| {
                        let mut outcomes = path.outcomes.clone();
                        outcomes.push(m as u8);
                        let mut anc = DMatrix::zeros(2, 2);
                        anc[(m, m)] = re(T::one());
                        Path { outcomes, state: hermitize(&(k * &path.state * k.adjoint())), idle_ancilla: Some(anc) }
                    })
                })
                .collect(),
            (Action::Conjugate { op }, _) => paths
                .into_iter()
                .map(|mut p| {
                    p.state = op.matrix() * &p.state * op.matrix();
                    p
                })
                .collect(),
            _ => paths,
        };
        for p in &mut paths {
            if let Some(ch) = &channels[j] {
                p.state = ch.apply_matrix(&p.state);
            }
            // The measured ancilla dephases while idle and is discarded by
            // the reset that precedes the next control.
            p.idle_ancilla = p.idle_ancilla.take().map(|anc| ancilla[j].apply_matrix(&anc));
        }
    }
    let branches = paths
        .into_iter()
        .map(|p| {
            Ok(Branch {
                probability: branch_probability(&p.state)?,
                weighted: trace_product(circuit.measure().matrix(), &p.state)?.re,
                outcomes: p.outcomes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchTable { branches })
}

/// Exact branch table of the protocol.
pub fn run_robust_exact<T: Real>(spec: &ProtocolSpec<T>) -> Result<BranchTable<T>> {
    run_circuit_exact(spec.circuit())
}

/// As [`run_robust_exact`] with ancilla dephasing.
pub fn run_robust_exact_noisy<T: Real>(spec: &ProtocolSpec<T>, noise: &AncillaNoise) -> Result<BranchTable<T>> {
    run_circuit_exact_noisy(spec.circuit(), noise)
}

/// RNG for shot `index` of a run seeded with `seed`.
pub(crate) fn shot_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn sample_sign<T: Real>(rng: &mut impl Rng, p_plus: T) -> i8 {
    let u: f64 = rng.random();
    if T::lit(u) < p_plus {
        1
    } else {
        -1
    }
}

/// `shots` independent runs in parallel, returned in shot order.
pub fn run_circuit_sampled<T: Real>(circuit: &Circuit<T>, shots: usize, seed: u64) -> Result<Vec<ShotRecord>> {
    run_circuit_sampled_noisy(circuit, shots, seed, &AncillaNoise::NONE)
}

pub fn run_circuit_sampled_noisy<T: Real>(circuit: &Circuit<T>, shots: usize, seed: u64, noise: &AncillaNoise) -> Result<Vec<ShotRecord>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("at least one shot is required".into()));
    }
    let channels = circuit.channels()?;
    let ancilla = ancilla_channels(circuit, noise)?;
    let kraus = control_kraus(circuit);
    let half = T::lit(0.5);
    (0..shots as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = shot_rng(seed, index);
            let mut state = circuit.initial_state().matrix().clone();
            let mut outcomes = Vec::with_capacity(circuit.n_controls());
            let mut idle_ancilla: Option<DMatrix<C<T>>> = None;
            for (j, action) in circuit.actions().iter().enumerate() {
                match (action, &kraus[j]) {
                    (Action::Control { .. }, Some([k0, k1])) => {
                        let b0 = k0 * &state * k0.adjoint();
                        let b1 = k1 * &state * k1.adjoint();
                        let p0 = branch_probability(&b0)?;
                        let p1 = branch_probability(&b1)?;
                        let u: f64 = rng.random();
                        let (m, b, p) = if T::lit(u) * (p0 + p1) < p0 { (0, b0, p0) } else { (1, b1, p1) };
                        outcomes.push(m);
                        state = hermitize(&b) * re(T::one() / p);
                        let mut anc = DMatrix::zeros(2, 2);
                        anc[(m as usize, m as usize)] = re(T::one());
                        idle_ancilla = Some(anc);
                    }
                    (Action::Conjugate { op }, _) => state = op.matrix() * &state * op.matrix(),
                    _ => {}
                }
                if let Some(ch) = &channels[j] {
                    state = ch.apply_matrix(&state);
                }
                idle_ancilla = idle_ancilla.map(|anc| ancilla[j].apply_matrix(&anc));
            }
            let mean = trace_product(circuit.measure().matrix(), &state)?.re / state.trace().re;
            let p_plus = ((T::one() + mean) * half).max(T::zero()).min(T::one());
            Ok(ShotRecord { outcomes, final_value: sample_sign(&mut rng, p_plus), seed_index: index })
        })
        .collect()
}

pub fn run_robust_sampled<T: Real>(spec: &ProtocolSpec<T>, shots: usize, seed: u64) -> Result<Vec<ShotRecord>> {
    run_circuit_sampled(spec.circuit(), shots, seed)
}

pub fn run_robust_sampled_noisy<T: Real>(spec: &ProtocolSpec<T>, shots: usize, seed: u64, noise: &AncillaNoise) -> Result<Vec<ShotRecord>> {
    run_circuit_sampled_noisy(spec.circuit(), shots, seed, noise)
}
