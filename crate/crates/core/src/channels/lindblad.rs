use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qmat::{DensityMatrix, Operator};
use crate::scalar::{Real, C};

type Matrices<T> = Vec<DMatrix<C<T>>>;

/// Time-dependent operator `t -> O(t)`.
pub type OperatorFn<T> = Arc<dyn Fn(T) -> Operator<T> + Send + Sync>;

/// Generator `L_t(rho) = -i[H(t), rho] + sum_k (2 L_k rho L_k^dag - {L_k^dag L_k, rho})`.
#[derive(Clone)]
pub struct LindbladGenerator<T: Real> {
    n_qubits: usize,
    hamiltonian: OperatorFn<T>,
    jumps: Vec<OperatorFn<T>>,
}

impl<T: Real> fmt::Debug for LindbladGenerator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LindbladGenerator").field("n_qubits", &self.n_qubits).field("jumps", &self.jumps.len()).finish()
    }
}

impl<T: Real> LindbladGenerator<T> {
    pub fn new(n_qubits: usize, hamiltonian: OperatorFn<T>, jumps: Vec<OperatorFn<T>>) -> Self {
        Self { n_qubits, hamiltonian, jumps }
    }

    pub fn time_independent(hamiltonian: Operator<T>, jumps: Vec<Operator<T>>) -> Result<Self> {
        let n_qubits = hamiltonian.n_qubits();
        if let Some(bad) = jumps.iter().find(|l| l.dim() != hamiltonian.dim()) {
            return Err(Error::DimensionMismatch { expected: hamiltonian.dim(), found: bad.dim() });
        }
        let h = Arc::new(move |_: T| hamiltonian.clone());
        let jumps = jumps.into_iter().map(|l| Arc::new(move |_: T| l.clone()) as OperatorFn<T>).collect();
        Ok(Self::new(n_qubits, h, jumps))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn hamiltonian_at(&self, t: T) -> Operator<T> {
        (self.hamiltonian)(t)
    }

    pub fn jumps_at(&self, t: T) -> Vec<Operator<T>> {
        self.jumps.iter().map(|l| l(t)).collect()
    }

    /// Evaluates the operators at `t` and checks their shapes.
    pub(crate) fn operators_at(&self, t: T) -> Result<(DMatrix<C<T>>, Matrices<T>)> {
        let d = self.dim();
        let h = self.hamiltonian_at(t).into_matrix();
        if h.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, found: h.nrows() });
        }
        if crate::qmat::max_abs_diff(&h, &h.adjoint()) > T::tol(1e-10) {
            return Err(Error::InvalidArgument("Hamiltonian is not Hermitian".into()));
        }
        let jumps = self.jumps_at(t).into_iter().map(Operator::into_matrix).collect::<Vec<_>>();
        if let Some(bad) = jumps.iter().find(|l| l.nrows() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.nrows() });
        }
        Ok((h, jumps))
    }
}

/// Applies the generator with pre-evaluated operators to any square matrix.
pub(crate) fn generator_action<T: Real>(h: &DMatrix<C<T>>, jumps: &[DMatrix<C<T>>], m: &DMatrix<C<T>>) -> DMatrix<C<T>> {
    let minus_i = C::new(T::zero(), -T::one());
    let two = C::new(T::lit(2.0), T::zero());
    let mut out = (h * m - m * h) * minus_i;
    for l in jumps {
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += (l * m * &ld) * two - &ldl * m - m * &ldl;
    }
    out
}

/// `d rho / dt` at time `t`.
pub fn lindblad_rhs<T: Real>(gen: &LindbladGenerator<T>, rho: &DensityMatrix<T>, t: T) -> Result<DMatrix<C<T>>> {
    if rho.dim() != gen.dim() {
        return Err(Error::DimensionMismatch { expected: gen.dim(), found: rho.dim() });
    }
    let (h, jumps) = gen.operators_at(t)?;
    Ok(generator_action(&h, &jumps, rho.matrix()))
}
