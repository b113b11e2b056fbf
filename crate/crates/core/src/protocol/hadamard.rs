use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::exec::shot_rng;
use super::step::{ancilla_rotation, controlled};
use super::{AncillaNoise, ProtocolSpec};
use crate::error::{Error, Result};
use crate::qmat::{hermitize, partial_trace_matrix};
use crate::scalar::{c, Real, C};

/// Ancilla measurement basis of the interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HadamardBasis {
    Z,
    Y,
}

/// Final ancilla expectations `<Z>` and `<Y>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HadamardExpectations<T> {
    pub z: T,
    pub y: T,
}

/// Joint evolution of the two-time interferometer; returns the reduced
/// ancilla state after `S^alpha H`.
fn final_ancilla<T: Real>(spec: &ProtocolSpec<T>, noise: &AncillaNoise) -> Result<DMatrix<C<T>>> {
    if spec.n() != 2 {
        return Err(Error::InvalidSpec(format!("the Hadamard test measures two-time correlators, got n = {}", spec.n())));
    }
    let rho = spec.initial_state();
    let ns = rho.n_qubits();
    let d = rho.dim();
    let half = c::<T>(0.5, 0.0);
    let plus = DMatrix::from_element(2, 2, half);
    let mut joint = rho.matrix().kronecker(&plus);

    let co1 = controlled(&spec.ops()[0]);
    joint = &co1 * joint * co1.adjoint();

    let (t1, t2) = (spec.times()[0], spec.times()[1]);
    if t2 > t1 {
        let system = spec.factory().channel(t1, t2)?;
        let targets: Vec<usize> = (0..ns).collect();
        let lifted = system.embedded(ns + 1, &targets)?;
        joint = lifted.apply_matrix(&joint);
        let dephasing = noise.channel(t1, t2)?.embedded(ns + 1, &[ns])?;
        joint = dephasing.apply_matrix(&joint);
    }

    let co2 = controlled(&spec.ops()[1]);
    let rotation = ancilla_rotation::<T>(d, spec.brackets()[0].alpha()) * co2;
    joint = &rotation * joint * rotation.adjoint();
    Ok(hermitize(&partial_trace_matrix(&joint, ns + 1, &[ns])?))
}

/// Exact ancilla expectations of the Hadamard-test circuit.
pub fn run_hadamard_test<T: Real>(spec: &ProtocolSpec<T>, noise: &AncillaNoise) -> Result<HadamardExpectations<T>> {
    let anc = final_ancilla(spec, noise)?;
    Ok(HadamardExpectations { z: anc[(0, 0)].re - anc[(1, 1)].re, y: T::lit(2.0) * anc[(1, 0)].im })
}

/// `shots` single-basis ancilla readouts (+1 or -1).
pub fn sample_hadamard_test<T: Real>(
    spec: &ProtocolSpec<T>,
    basis: HadamardBasis,
    noise: &AncillaNoise,
    shots: usize,
    seed: u64,
) -> Result<Vec<i8>> {
    let e = run_hadamard_test(spec, noise)?;
    let mean = match basis {
        HadamardBasis::Z => e.z,
        HadamardBasis::Y => e.y,
    };
    let p_plus = ((T::one() + mean) * T::lit(0.5)).to_f64_lossy().clamp(0.0, 1.0);
    Ok((0..shots as u64)
        .map(|i| {
            let u: f64 = shot_rng(seed, i).random();
            if u < p_plus {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// `C = <O_2(t_2) O_1(t_1)>` from the ancilla expectations: for
/// `alpha = 0`, `<Z> = Re C` and `<Y> = -Im C`; for `alpha = 1`,
/// `<Z> = -Im C` and `<Y> = -Re C`.
pub fn extract_hadamard<T: Real>(alpha: u8, z: T, y: T) -> C<T> {
    if alpha == 0 {
        C::new(z, -y)
    } else {
        C::new(-y, -z)
    }
}
