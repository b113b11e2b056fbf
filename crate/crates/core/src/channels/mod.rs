//! Quantum channels in Kraus form, Lindblad generators and the
//! transfer-matrix / Choi pipeline that turns a generator into Kraus
//! operators.

mod choi;
mod lindblad;

pub(crate) use choi::transfer_of_kraus;
pub use choi::{
    apply_transfer, default_steps, integrate_transfer_matrix, kraus_from_choi, pauli_basis, ChoiData, CHOI_INTEGRATION_TOL,
    CHOI_POSITIVITY_TOL,
};
pub use lindblad::{lindblad_rhs, LindbladGenerator, OperatorFn};

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{embed_matrix, hermitize, max_abs_diff, DensityMatrix, Operator, PauliString};
use crate::scalar::{re, Real, C};

/// How a channel was obtained; selects the completeness tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    FromChoi,
    Composed,
    Trotterized,
}

impl Provenance {
    pub fn completeness_tol(self) -> f64 {
        match self {
            Provenance::Analytic => 1e-10,
            Provenance::Composed => 1e-9,
            Provenance::FromChoi | Provenance::Trotterized => 1e-8,
        }
    }
}

/// Completely positive trace-preserving map `rho -> sum_i K_i rho K_i^dag`
/// over a time interval.
#[derive(Clone, Debug)]
pub struct QuantumChannel<T: Real> {
    kraus: Vec<Operator<T>>,
    interval: (T, T),
    provenance: Provenance,
}

impl<T: Real> QuantumChannel<T> {
    pub fn new(kraus: Vec<Operator<T>>, interval: (T, T), provenance: Provenance) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidArgument("channel needs at least one Kraus operator".into()))?;
        let dim = first.dim();
        if let Some(bad) = kraus.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        let ch = Self { kraus, interval, provenance };
        let defect = ch.completeness_defect();
        let tol = T::tol(provenance.completeness_tol());
        if !defect.is_finite() || defect > tol {
            return Err(Error::Completeness { defect: defect.to_f64_lossy(), tolerance: tol.to_f64_lossy() });
        }
        Ok(ch)
    }

    pub fn identity(n_qubits: usize, interval: (T, T)) -> Self {
        Self { kraus: vec![Operator::identity(n_qubits)], interval, provenance: Provenance::Analytic }
    }

    /// Phase damping that multiplies single-qubit coherences by `factor`.
    pub fn phase_damping(factor: T, interval: (T, T)) -> Result<Self> {
        let half = T::lit(0.5);
        let keep = ((T::one() + factor) * half).sqrt();
        let flip = ((T::one() - factor) * half).max(T::zero()).sqrt();
        let z: Operator<T> = PauliString::new(vec![crate::qmat::Pauli::Z]).to_operator();
        Self::new(vec![Operator::identity(1).scale(re(keep)), z.scale(re(flip))], interval, Provenance::Analytic)
    }

    /// Dephasing generated by the jump operator `sqrt(rate/2) Z`; coherences
    /// decay as `exp(-2 rate tau)`.
    pub fn dephasing(rate: T, interval: (T, T)) -> Result<Self> {
        let tau = interval.1 - interval.0;
        Self::phase_damping((-(T::lit(2.0) * rate * tau)).exp(), interval)
    }

    /// `rho -> (1-p) rho + p I/2`.
    pub fn depolarizing(p: T, interval: (T, T)) -> Result<Self> {
        let quarter = p / T::lit(4.0);
        let mut kraus = vec![Operator::identity(1).scale(re((T::one() - T::lit(3.0) * quarter).sqrt()))];
        for l in ["X", "Y", "Z"] {
            let op: Operator<T> = l.parse::<PauliString>()?.to_operator();
            kraus.push(op.scale(re(quarter.sqrt())));
        }
        Self::new(kraus, interval, Provenance::Analytic)
    }

    /// Decay `|1> -> |0>` with probability `gamma`.
    pub fn amplitude_damping(gamma: T, interval: (T, T)) -> Result<Self> {
        let zero = re(T::zero());
        let one = re(T::one());
        let k0 = Operator::from_row_slice(2, &[one, zero, zero, re((T::one() - gamma).sqrt())])?;
        let k1 = Operator::from_row_slice(2, &[zero, re(gamma.sqrt()), zero, zero])?;
        Self::new(vec![k0, k1], interval, Provenance::Analytic)
    }

    pub fn kraus(&self) -> &[Operator<T>] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].dim()
    }

    pub fn n_qubits(&self) -> usize {
        self.kraus[0].n_qubits()
    }

    pub fn interval(&self) -> (T, T) {
        self.interval
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `max |sum_i K_i^dag K_i - I|`.
    pub fn completeness_defect(&self) -> T {
        let d = self.dim();
        let sum = self.kraus.iter().fold(DMatrix::zeros(d, d), |acc: DMatrix<C<T>>, k| acc + k.matrix().adjoint() * k.matrix());
        max_abs_diff(&sum, &DMatrix::identity(d, d))
    }

    /// `sum_i K_i m K_i^dag` for any square `m` of matching size.
    pub fn apply_matrix(&self, m: &DMatrix<C<T>>) -> DMatrix<C<T>> {
        let d = self.dim();
        self.kraus.iter().fold(DMatrix::zeros(d, d), |acc: DMatrix<C<T>>, k| acc + k.matrix() * m * k.matrix().adjoint())
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found });
        }
        Ok(())
    }

    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        self.check_dim(rho.dim())?;
        Ok(DensityMatrix::from_matrix_unchecked(hermitize(&self.apply_matrix(rho.matrix()))))
    }

    /// The same channel acting on `targets` of an `n_qubits` register.
    pub fn embedded(&self, n_qubits: usize, targets: &[usize]) -> Result<Self> {
        if targets.len() != self.n_qubits() {
            return Err(Error::DimensionMismatch { expected: self.n_qubits(), found: targets.len() });
        }
        let kraus = self
            .kraus
            .iter()
            .map(|k| embed_matrix(k.matrix(), n_qubits, targets).map(Operator::from_matrix_unchecked))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kraus, interval: self.interval, provenance: self.provenance })
    }

    /// Transfer matrix `F_rs = Tr[sigma_r Phi(sigma_s)]` in the normalized
    /// Pauli basis.
    pub fn transfer_matrix(&self) -> DMatrix<C<T>> {
        let kraus: Vec<DMatrix<C<T>>> = self.kraus.iter().map(|k| k.matrix().clone()).collect();
        transfer_of_kraus(&kraus, &pauli_basis::<T>(self.n_qubits()))
    }

    /// Largest deviation between the actions of two channels on the
    /// normalized Pauli basis.
    pub fn action_distance(&self, other: &Self) -> Result<T> {
        self.check_dim(other.dim())?;
        Ok(pauli_basis::<T>(self.n_qubits())
            .iter()
            .map(|s| max_abs_diff(&self.apply_matrix(s), &other.apply_matrix(s)))
            .fold(T::zero(), |a, b| if b > a { b } else { a }))
    }
}

/// `rho' = sum_i K_i rho K_i^dag`.
pub fn apply_channel<T: Real>(ch: &QuantumChannel<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    ch.apply(rho)
}

/// Applies `ch` to the qubits `target` of `rho`, identity elsewhere.
pub fn apply_channel_on_subsystem<T: Real>(ch: &QuantumChannel<T>, rho: &DensityMatrix<T>, target: &[usize]) -> Result<DensityMatrix<T>> {
    ch.embedded(rho.n_qubits(), target)?.apply(rho)
}

/// `later o earlier`, Kraus set `{K_j^later K_i^earlier}`.
pub fn compose<T: Real>(later: &QuantumChannel<T>, earlier: &QuantumChannel<T>) -> Result<QuantumChannel<T>> {
    later.check_dim(earlier.dim())?;
    let (e_from, e_to) = earlier.interval;
    let (l_from, l_to) = later.interval;
    let scale = T::one().max(e_to.abs()).max(l_from.abs());
    if (l_from - e_to).abs() > T::tol(1e-12) * scale {
        return Err(Error::IntervalMismatch { earlier_end: e_to.to_f64_lossy(), later_start: l_from.to_f64_lossy() });
    }
    let zero = Complex::new(T::zero(), T::zero());
    let kraus = later
        .kraus
        .iter()
        .flat_map(|kl| earlier.kraus.iter().map(move |ke| kl * ke))
        .filter(|k| k.matrix().iter().any(|z| *z != zero))
        .collect();
    QuantumChannel::new(kraus, (e_from, l_to), Provenance::Composed)
}
