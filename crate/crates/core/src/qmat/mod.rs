//! Dense operator and density-matrix algebra on small qubit registers.

mod density;
mod operator;
mod pauli;

pub use density::{DensityMatrix, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL};
pub use operator::{Operator, DEFAULT_MAX_QUBITS};
pub use pauli::{Pauli, PauliString};

pub(crate) use density::{hermitian_eigen, hermitize};
pub(crate) use operator::max_abs_diff;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Kronecker product, `a` on the high-order qubits.
pub fn tensor<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Operator<T> {
    a.tensor(b)
}

/// `Tr(op * rho)`.
pub fn expect<T: Real>(op: &Operator<T>, rho: &DensityMatrix<T>) -> Result<C<T>> {
    trace_product(op.matrix(), rho.matrix())
}

/// `Tr(a * b)` without forming the product.
pub(crate) fn trace_product<T: Real>(a: &DMatrix<C<T>>, b: &DMatrix<C<T>>) -> Result<C<T>> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    let n = a.nrows();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

fn check_subset(n_qubits: usize, qubits: &[usize]) -> Result<()> {
    let mut seen = vec![false; n_qubits];
    for &q in qubits {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
        if seen[q] {
            return Err(Error::DuplicateQubit(q));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Extracts the sub-index formed by the bits of `index` at `qubits`, the first
/// listed qubit being the most significant.
fn gather_bits(index: usize, n_qubits: usize, qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |acc, &q| (acc << 1) | ((index >> (n_qubits - 1 - q)) & 1))
}

fn rest_mask(n_qubits: usize, qubits: &[usize]) -> usize {
    let full = (1usize << n_qubits) - 1;
    qubits.iter().fold(full, |m, &q| m & !(1usize << (n_qubits - 1 - q)))
}

/// Partial trace of a square matrix on `n_qubits`, keeping `keep` (result
/// ordered by ascending qubit index).
pub(crate) fn partial_trace_matrix<T: Real>(mat: &DMatrix<C<T>>, n_qubits: usize, keep: &[usize]) -> Result<DMatrix<C<T>>> {
    check_subset(n_qubits, keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !kept.contains(q)).collect();
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let compose = |k: usize, t: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in kept.iter().enumerate() {
            let bit = (k >> (kept.len() - 1 - pos)) & 1;
            idx |= bit << (n_qubits - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let bit = (t >> (traced.len() - 1 - pos)) & 1;
            idx |= bit << (n_qubits - 1 - q);
        }
        idx
    };
    let mut out = DMatrix::zeros(dk, dk);
    for r in 0..dk {
        for c in 0..dk {
            let mut acc = Complex::new(T::zero(), T::zero());
            for t in 0..dt {
                acc += mat[(compose(r, t), compose(c, t))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Reduced state on the qubits in `keep`.
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: &[usize]) -> Result<DensityMatrix<T>> {
    let reduced = partial_trace_matrix(rho.matrix(), rho.n_qubits(), keep)?;
    Ok(DensityMatrix::from_matrix_unchecked(hermitize(&reduced)))
}

/// Lifts an operator on `targets` to the full `n_qubits` register.
pub(crate) fn embed_matrix<T: Real>(op: &DMatrix<C<T>>, n_qubits: usize, targets: &[usize]) -> Result<DMatrix<C<T>>> {
    check_subset(n_qubits, targets)?;
    let expected = 1usize << targets.len();
    if op.nrows() != expected {
        return Err(Error::DimensionMismatch { expected, found: op.nrows() });
    }
    let d = 1usize << n_qubits;
    let mask = rest_mask(n_qubits, targets);
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        let si = gather_bits(i, n_qubits, targets);
        for j in 0..d {
            if i & mask == j & mask {
                out[(i, j)] = op[(si, gather_bits(j, n_qubits, targets))];
            }
        }
    }
    Ok(out)
}

pub fn embed<T: Real>(op: &Operator<T>, n_qubits: usize, targets: &[usize]) -> Result<Operator<T>> {
    Ok(Operator::from_matrix_unchecked(embed_matrix(op.matrix(), n_qubits, targets)?))
}
