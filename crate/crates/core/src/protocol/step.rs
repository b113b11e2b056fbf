use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Bracket;
use crate::error::{Error, Result};
use crate::qmat::{hermitize, DensityMatrix, Operator};
use crate::scalar::{c, i_pow, re, Real, C};

/// Phase gate applied to the ancilla before the Hadamard.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseGate {
    /// `diag(1, i)`
    S,
    /// `diag(1, -i)`
    SDagger,
}

/// The phase gate used throughout.
pub const PHASE_GATE: PhaseGate = PhaseGate::S;

const NEGATIVE_PROBABILITY_TOL: f64 = 1e-10;

/// One measurement outcome of a controlled step.
#[derive(Clone, Debug)]
pub struct StepBranch<T: Real> {
    pub outcome: u8,
    pub probability: T,
    /// Unnormalized post-measurement system state.
    pub state: DMatrix<C<T>>,
}

/// `H S^alpha` on the ancilla.
fn ancilla_gate<T: Real>(alpha: u8) -> DMatrix<C<T>> {
    let h = c::<T>(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let phase = match PHASE_GATE {
        PhaseGate::S => i_pow::<T>(alpha as i32),
        PhaseGate::SDagger => i_pow::<T>(-(alpha as i32)),
    };
    DMatrix::from_row_slice(2, 2, &[h, h * phase, h, -(h * phase)])
}

/// Controlled-`O` on system x ancilla, ancilla as the least significant
/// qubit.
pub(crate) fn controlled<T: Real>(op: &Operator<T>) -> DMatrix<C<T>> {
    let d = op.dim();
    let mut out = DMatrix::from_element(2 * d, 2 * d, re(T::zero()));
    for i in 0..d {
        out[(2 * i, 2 * i)] = re(T::one());
        for j in 0..d {
            out[(2 * i + 1, 2 * j + 1)] = op.matrix()[(i, j)];
        }
    }
    out
}

/// `I x H S^alpha` on system x ancilla.
pub(crate) fn ancilla_rotation<T: Real>(system_dim: usize, alpha: u8) -> DMatrix<C<T>> {
    DMatrix::<C<T>>::identity(system_dim, system_dim).kronecker(&ancilla_gate::<T>(alpha))
}

/// System operators `K_m = (I x <m|) (I x H S^alpha) CO (I x |+>)` of the
/// controlled step, read off the joint system-ancilla unitary.
pub(crate) fn step_kraus<T: Real>(op: &Operator<T>, bracket: Bracket) -> [DMatrix<C<T>>; 2] {
    let d = op.dim();
    let joint = ancilla_rotation::<T>(d, bracket.alpha()) * controlled(op);
    let plus = c::<T>(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let kraus = |m: usize| DMatrix::from_fn(d, d, |i, j| (joint[(2 * i + m, 2 * j)] + joint[(2 * i + m, 2 * j + 1)]) * plus);
    [kraus(0), kraus(1)]
}

pub(crate) fn branch_probability<T: Real>(state: &DMatrix<C<T>>) -> Result<T> {
    let p = state.trace().re;
    if p < -T::tol(NEGATIVE_PROBABILITY_TOL) {
        return Err(Error::NegativeProbability(p.to_f64_lossy()));
    }
    Ok(p.max(T::zero()))
}

fn check_op<T: Real>(rho: &DensityMatrix<T>, op: &Operator<T>) -> Result<()> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: op.dim() });
    }
    let tol = T::tol(1e-10);
    if !op.is_hermitian(tol) || !op.is_unitary(tol) {
        return Err(Error::NotHermitianUnitary { label: op.display_label() });
    }
    Ok(())
}

/// Both outcomes of a controlled step with their probabilities.
pub fn step_update_exact<T: Real>(rho: &DensityMatrix<T>, op: &Operator<T>, bracket: Bracket) -> Result<[StepBranch<T>; 2]> {
    check_op(rho, op)?;
    let [k0, k1] = step_kraus(op, bracket);
    let branch = |outcome: u8, k: &DMatrix<C<T>>| -> Result<StepBranch<T>> {
        let state = hermitize(&(k * rho.matrix() * k.adjoint()));
        Ok(StepBranch { outcome, probability: branch_probability(&state)?, state })
    };
    Ok([branch(0, &k0)?, branch(1, &k1)?])
}

/// Samples the ancilla outcome and returns it with the normalized
/// conditional state.
pub fn step_update_sampled<T: Real>(
    rho: &DensityMatrix<T>,
    op: &Operator<T>,
    bracket: Bracket,
    rng: &mut impl Rng,
) -> Result<(u8, DensityMatrix<T>)> {
    let [b0, b1] = step_update_exact(rho, op, bracket)?;
    let total = b0.probability + b1.probability;
    let u: f64 = rng.random();
    let chosen = if T::lit(u) * total < b0.probability { b0 } else { b1 };
    let scale = re(T::one() / chosen.probability);
    Ok((chosen.outcome, DensityMatrix::from_matrix_unchecked(chosen.state * scale)))
}
