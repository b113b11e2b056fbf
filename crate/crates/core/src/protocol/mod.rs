//! The ancilla measure-and-reset protocol and the Hadamard-test baseline,
//! simulated exactly (branch enumeration) or by sampling shots.
//!
//! Registers put the system first and the ancilla last. Each controlled
//! step prepares the ancilla in `|+>`, applies `O` on the system when the
//! ancilla is `|1>`, then `S^alpha` and `H` on the ancilla, and measures it.
//! With `S = diag(1, i)` the outcome-`m` branch is
//! `(rho + O rho O + (-1)^m (i^alpha O rho + h.c.)) / 4`.

mod circuit;
mod exec;
mod hadamard;
mod step;

pub use circuit::{Action, CachedFactory, ChannelFactory, Circuit, ProtocolSpec};
pub use exec::{
    run_circuit_exact, run_circuit_exact_noisy, run_circuit_sampled, run_circuit_sampled_noisy, run_robust_exact, run_robust_exact_noisy,
    run_robust_sampled, run_robust_sampled_noisy, Branch, BranchTable, ShotRecord,
};
pub use hadamard::{extract_hadamard, run_hadamard_test, sample_hadamard_test, HadamardBasis, HadamardExpectations};
pub use step::{step_update_exact, step_update_sampled, PhaseGate, StepBranch, PHASE_GATE};

use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which bracket a controlled step contributes to the nested correlator.
///
/// `Anticommutator` runs the step without the phase gate (`alpha = 0`),
/// `Commutator` with it (`alpha = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bracket {
    Commutator,
    Anticommutator,
}

impl Bracket {
    pub const BOTH: [Bracket; 2] = [Bracket::Commutator, Bracket::Anticommutator];

    /// Exponent of the phase gate applied before the Hadamard.
    pub fn alpha(self) -> u8 {
        match self {
            Bracket::Anticommutator => 0,
            Bracket::Commutator => 1,
        }
    }

    pub fn from_alpha(alpha: u8) -> Result<Self> {
        match alpha {
            0 => Ok(Bracket::Anticommutator),
            1 => Ok(Bracket::Commutator),
            other => Err(Error::InvalidArgument(format!("alpha must be 0 or 1, got {other}"))),
        }
    }

    /// `-1` for the commutator `AB - BA`, `+1` for `AB + BA`.
    pub fn sign(self) -> i8 {
        match self {
            Bracket::Commutator => -1,
            Bracket::Anticommutator => 1,
        }
    }
}

/// Dephasing of the interferometer ancilla while the system evolves;
/// ancilla coherences decay as `exp(-rate tau)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AncillaNoise {
    pub dephasing_rate: f64,
}

impl AncillaNoise {
    pub const NONE: AncillaNoise = AncillaNoise { dephasing_rate: 0.0 };

    pub fn new(dephasing_rate: f64) -> Result<Self> {
        if !(dephasing_rate >= 0.0 && dephasing_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("ancilla dephasing rate must be finite and non-negative, got {dephasing_rate}")));
        }
        Ok(Self { dephasing_rate })
    }

    /// Single-qubit channel acting on the ancilla over `[from, to]`.
    pub fn channel<T: Real>(&self, from: T, to: T) -> Result<QuantumChannel<T>> {
        let factor = (-(T::lit(self.dephasing_rate) * (to - from))).exp();
        QuantumChannel::phase_damping(factor, (from, to))
    }
}
