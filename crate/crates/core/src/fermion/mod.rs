//! Driven-dissipative spinless fermion mode `k` under a DC field, coupled to
//! a flat Fermi-Dirac bath.
//!
//! The mode lives on one qubit with `|0>` empty and `|1>` occupied, so
//! `d = |0><1|` and `P1 = d^dag d = |1><1|`.

mod green;
mod integrated;
mod quadrature;
mod via_protocol;

pub use green::{green_greater, green_lesser, green_retarded};
pub use integrated::{
    composed_transfer, integrated_kraus, integrated_kraus_variant, trotterized_channel, CoefficientResolution, Coefficients, IntegratedMap,
    ORACLE_STEPS_PER_UNIT, VALIDATION_TOL,
};
pub use via_protocol::{green_retarded_via_hadamard, green_retarded_via_protocol, mode_channel, MapKind, ProtocolGreen};

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::{LindbladGenerator, OperatorFn, Provenance, QuantumChannel};
use crate::error::{Error, Result};
use crate::qmat::{DensityMatrix, Operator};
use crate::scalar::{re, Real, C};

/// Parameters of the mode. Defaults are the reference parameters used
/// experiment: `J = 1`, `Omega = 1`, `Gamma = 1/16`, `beta = 100`, `k = -0.5`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams<T> {
    #[serde(rename = "J")]
    pub j: T,
    #[serde(rename = "Omega")]
    pub omega: T,
    #[serde(rename = "Gamma")]
    pub gamma: T,
    pub beta: T,
    pub k: T,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self { j: T::one(), omega: T::one(), gamma: T::lit(1.0 / 16.0), beta: T::lit(100.0), k: T::lit(-0.5) }
    }
}

impl<T: Real> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.j, self.omega, self.gamma, self.beta, self.k].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("model parameters must be finite".into()));
        }
        if self.j <= T::zero() {
            return Err(Error::InvalidArgument(format!("J must be positive, got {}", self.j)));
        }
        if self.gamma < T::zero() {
            return Err(Error::InvalidArgument(format!("Gamma must be non-negative, got {}", self.gamma)));
        }
        if self.beta <= T::zero() {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    /// Occupation used when none is configured: `n_F(eps_k(0))`.
    pub fn default_occupation(&self) -> T {
        fermi(self, dispersion(self, T::zero()))
    }
}

/// `eps_k(t) = -2J cos(k + Omega t)`.
pub fn dispersion<T: Real>(p: &ModelParams<T>, t: T) -> T {
    -(T::lit(2.0) * p.j * (p.k + p.omega * t).cos())
}

/// Fermi-Dirac occupation `1 / (1 + exp(beta x))`, evaluated without overflow.
pub fn fermi<T: Real>(p: &ModelParams<T>, x: T) -> T {
    fermi_beta(p.beta, x)
}

pub(crate) fn fermi_beta<T: Real>(beta: T, x: T) -> T {
    let y = beta * x;
    if y >= T::zero() {
        let e = (-y).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + y.exp())
    }
}

/// `f_k(t, t') = int_{t'}^t eps_k(s) ds`.
pub fn accumulated_phase<T: Real>(p: &ModelParams<T>, t: T, t_prime: T) -> T {
    // -(2J/Omega)[sin(k + Omega t) - sin(k + Omega t')] written with a sinc
    // so that Omega -> 0 needs no special case.
    let tau = t - t_prime;
    let half = T::lit(0.5);
    let x = p.omega * tau * half;
    let sinc = if x.abs() < T::lit(1e-4) { T::one() - x * x / T::lit(6.0) } else { x.sin() / x };
    -(T::lit(2.0) * p.j * tau * (p.k + p.omega * (t + t_prime) * half).cos() * sinc)
}

/// Annihilator `d = |0><1|`.
pub fn annihilator<T: Real>() -> Operator<T> {
    Operator::ket_bra(1, 0, 1).with_label("d")
}

/// Creator `d^dag = |1><0|`.
pub fn creator<T: Real>() -> Operator<T> {
    Operator::ket_bra(1, 1, 0).with_label("d+")
}

/// `diag(1 - n, n)`.
pub fn mode_state<T: Real>(n: T) -> Result<DensityMatrix<T>> {
    if !(n >= T::zero() && n <= T::one()) {
        return Err(Error::InvalidArgument(format!("occupation must lie in [0, 1], got {n}")));
    }
    DensityMatrix::diagonal(&[T::one() - n, n])
}

/// Generator with `H = eps(t) P1`, `L_out = sqrt(Gamma n_F(-eps)) d` and
/// `L_in = sqrt(Gamma n_F(eps)) d^dag`.
pub fn generator<T: Real>(p: &ModelParams<T>) -> LindbladGenerator<T> {
    let p = *p;
    let h: OperatorFn<T> = Arc::new(move |t| Operator::ket_bra(1, 1, 1).scale(re(dispersion(&p, t))));
    let out: OperatorFn<T> = Arc::new(move |t| annihilator().scale(re((p.gamma * fermi(&p, -dispersion(&p, t))).sqrt())));
    let inn: OperatorFn<T> = Arc::new(move |t| creator().scale(re((p.gamma * fermi(&p, dispersion(&p, t))).sqrt())));
    LindbladGenerator::new(1, h, vec![out, inn])
}

/// Kraus operators of one step of length `dt` with the level frozen at `eps`.
pub(crate) fn infinitesimal_ops<T: Real>(p: &ModelParams<T>, eps: T, dt: T) -> Result<[DMatrix<C<T>>; 3]> {
    let two_g_dt = T::lit(2.0) * p.gamma * dt;
    let fill = two_g_dt * fermi(p, eps);
    let empty = two_g_dt * fermi(p, -eps);
    if fill > T::one() || empty > T::one() {
        return Err(Error::NegativeRadicand { expr: "1 - 2 Gamma n_F dt", value: (T::one() - fill.max(empty)).to_f64_lossy() });
    }
    let zero = re(T::zero());
    let phase = C::new((eps * dt).cos(), -(eps * dt).sin());
    let k0 = DMatrix::from_row_slice(2, 2, &[re((T::one() - fill).sqrt()), zero, zero, phase * re((T::one() - empty).sqrt())]);
    let k1 = DMatrix::from_row_slice(2, 2, &[zero, zero, re(fill.sqrt()), zero]);
    let k2 = DMatrix::from_row_slice(2, 2, &[zero, re(empty.sqrt()), zero, zero]);
    Ok([k0, k1, k2])
}

/// One step `t -> t + dt` of the mode dynamics with the level evaluated at
/// `t`.
pub fn infinitesimal_kraus<T: Real>(p: &ModelParams<T>, t: T, dt: T) -> Result<QuantumChannel<T>> {
    p.validate()?;
    if dt < T::zero() {
        return Err(Error::InvalidArgument("step must be non-negative".into()));
    }
    let ops = infinitesimal_ops(p, dispersion(p, t), dt)?;
    QuantumChannel::new(ops.into_iter().map(Operator::from_matrix_unchecked).collect(), (t, t + dt), Provenance::Analytic)
}
