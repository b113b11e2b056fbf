use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Largest register accepted by the dense representation.
pub const DEFAULT_MAX_QUBITS: usize = 8;

/// Dense complex operator on a register of qubits.
///
/// The first qubit of the register is the most significant bit of the
/// computational-basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T: Real> {
    mat: DMatrix<C<T>>,
    label: Option<String>,
}

/// Number of qubits for a power-of-two dimension.
pub(crate) fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    let qubits = dim.trailing_zeros() as usize;
    if qubits > DEFAULT_MAX_QUBITS {
        return Err(Error::RegisterTooLarge { qubits, cap: DEFAULT_MAX_QUBITS });
    }
    Ok(qubits)
}

pub(crate) fn check_square<T: Real>(mat: &DMatrix<C<T>>) -> Result<usize> {
    if mat.nrows() != mat.ncols() {
        return Err(Error::NotSquare { rows: mat.nrows(), cols: mat.ncols() });
    }
    qubits_for_dim(mat.nrows())
}

impl<T: Real> Operator<T> {
    pub fn from_matrix(mat: DMatrix<C<T>>) -> Result<Self> {
        check_square(&mat)?;
        Ok(Self { mat, label: None })
    }

    /// Builds a `dim`x`dim` operator from row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[C<T>]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C<T>>) -> Self {
        Self { mat, label: None }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self { mat: DMatrix::identity(d, d), label: Some("I".into()) }
    }

    pub fn zeros(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self { mat: DMatrix::zeros(d, d), label: None }
    }

    /// `|row><col|` on an `n_qubits` register.
    pub fn ket_bra(n_qubits: usize, row: usize, col: usize) -> Self {
        let mut op = Self::zeros(n_qubits);
        op.mat[(row, col)] = Complex::new(T::one(), T::zero());
        op
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub(crate) fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("<{}x{} operator>", self.dim(), self.dim()))
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

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint(), label: self.label.as_ref().map(|l| format!("{l}^dag")) }
    }

    pub fn trace(&self) -> C<T> {
        self.mat.trace()
    }

    pub fn scale(&self, factor: C<T>) -> Self {
        Self::from_matrix_unchecked(self.mat.map(|z| z * factor))
    }

    /// Kronecker product with `self` on the high-order qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        let label = match (&self.label, &other.label) {
            (Some(a), Some(b)) => Some(format!("{a}{b}")),
            _ => None,
        };
        Self { mat: self.mat.kronecker(&other.mat), label }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        max_abs_diff(&self.mat, &other.mat)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        max_abs_diff(&self.mat, &self.mat.adjoint()) <= tol
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        let d = self.dim();
        max_abs_diff(&(self.mat.adjoint() * &self.mat), &DMatrix::identity(d, d)) <= tol
    }
}

pub(crate) fn max_abs_diff<T: Real>(a: &DMatrix<C<T>>, b: &DMatrix<C<T>>) -> T {
    a.iter().zip(b.iter()).map(|(x, y)| crate::scalar::cabs(*x - *y)).fold(T::zero(), |acc, v| if v > acc { v } else { acc })
}

impl<T: Real> Mul for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: Self) -> Operator<T> {
        Operator::from_matrix_unchecked(&self.mat * &rhs.mat)
    }
}

impl<T: Real> Add for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: Self) -> Operator<T> {
        Operator::from_matrix_unchecked(&self.mat + &rhs.mat)
    }
}

impl<T: Real> Sub for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: Self) -> Operator<T> {
        Operator::from_matrix_unchecked(&self.mat - &rhs.mat)
    }
}

impl<T: Real> Neg for &Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        Operator::from_matrix_unchecked(-&self.mat)
    }
}
