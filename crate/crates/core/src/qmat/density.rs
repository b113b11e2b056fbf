use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use super::operator::{check_square, max_abs_diff, Operator};
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest admissible eigenvalue of a state.
pub const POSITIVITY_TOL: f64 = -1e-9;

/// Hermitian, unit-trace, positive semidefinite state of a register.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    mat: DMatrix<C<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(mat: DMatrix<C<T>>) -> Result<Self> {
        check_square(&mat)?;
        let herm = max_abs_diff(&mat, &mat.adjoint());
        if herm > T::tol(HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm})")));
        }
        let tr = mat.trace();
        if (tr.re - T::one()).abs() > T::tol(TRACE_TOL) || tr.im.abs() > T::tol(TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = min_eigenvalue(&mat);
        if min_eig < -T::tol(-POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!("smallest eigenvalue {min_eig} is negative")));
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C<T>>) -> Self {
        Self { mat }
    }

    /// Projector onto computational basis state `index`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let d = 1usize << n_qubits;
        if index >= d {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {d}")));
        }
        Ok(Self { mat: Operator::<T>::ket_bra(n_qubits, index, index).into_matrix() })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        let w = T::one() / T::lit(d as f64);
        Self { mat: DMatrix::identity(d, d).map(|z: C<T>| z.scale(w)) }
    }

    /// `|psi><psi|` for a (not necessarily normalized) state vector.
    pub fn pure(amplitudes: &[C<T>]) -> Result<Self> {
        let psi = DVector::from_column_slice(amplitudes);
        let norm2 = psi.norm_squared();
        if norm2 <= T::zero() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let mat = (&psi * psi.adjoint()).map(|z| z.unscale(norm2));
        Self::new(mat)
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(populations: &[T]) -> Result<Self> {
        let d = populations.len();
        let mut mat = DMatrix::zeros(d, d);
        for (i, p) in populations.iter().enumerate() {
            mat[(i, i)] = Complex::new(*p, T::zero());
        }
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C<T>> {
        self.mat
    }

    pub fn trace(&self) -> C<T> {
        self.mat.trace()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { mat: self.mat.kronecker(&other.mat) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        max_abs_diff(&self.mat, &other.mat)
    }

    pub fn min_eigenvalue(&self) -> T {
        min_eigenvalue(&self.mat)
    }

    pub fn purity(&self) -> T {
        (&self.mat * &self.mat).trace().re
    }
}

pub(crate) fn hermitize<T: Real>(mat: &DMatrix<C<T>>) -> DMatrix<C<T>> {
    let half = T::lit(0.5);
    (mat + mat.adjoint()).map(|z| z.scale(half))
}

/// Eigen-decomposition of a Hermitian matrix (ascending eigenvalues are not
/// guaranteed; callers sort).
pub(crate) fn hermitian_eigen<T: Real>(mat: &DMatrix<C<T>>) -> (DVector<T>, DMatrix<C<T>>) {
    let eig = SymmetricEigen::new(hermitize(mat));
    (eig.eigenvalues, eig.eigenvectors)
}

pub(crate) fn min_eigenvalue<T: Real>(mat: &DMatrix<C<T>>) -> T {
    let (vals, _) = hermitian_eigen(mat);
    vals.iter().copied().fold(T::max_value().unwrap_or_else(T::one), |a, b| if b < a { b } else { a })
}
