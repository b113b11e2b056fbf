use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qmat::{DensityMatrix, Operator};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, dim: usize) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(dim, dim, |_, _| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Full-rank random state `A A^dag / Tr`.
pub fn random_density(rng: &mut impl Rng, n_qubits: usize) -> DensityMatrix<f64> {
    let a = random_matrix(rng, 1 << n_qubits);
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

/// Unitary from the QR decomposition of a random matrix.
pub fn random_unitary(rng: &mut impl Rng, n_qubits: usize) -> Operator<f64> {
    let q = random_matrix(rng, 1 << n_qubits).qr().q();
    Operator::from_matrix(q).unwrap()
}

/// Random CPTP map with `n_kraus` operators, from the blocks of a random
/// isometry.
pub fn random_channel(rng: &mut impl Rng, n_qubits: usize, n_kraus: usize, interval: (f64, f64)) -> crate::channels::QuantumChannel<f64> {
    let d = 1 << n_qubits;
    let tall = DMatrix::from_fn(d * n_kraus, d, |_, _| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let q = tall.qr().q();
    let kraus = (0..n_kraus).map(|k| Operator::from_matrix(q.rows(k * d, d).into_owned()).unwrap()).collect();
    crate::channels::QuantumChannel::new(kraus, interval, crate::channels::Provenance::Composed).unwrap()
}

/// Random Pauli string with sign +1 or -1.
pub fn random_pauli(rng: &mut impl Rng, n_qubits: usize) -> Operator<f64> {
    let s = crate::qmat::PauliString::from_index(n_qubits, rng.random_range(0..1usize << (2 * n_qubits)));
    let s = if rng.random_bool(0.5) { s.negated() } else { s };
    s.to_operator()
}

/// Random Hermitian unitary `U D U^dag` with `D` a random sign pattern.
pub fn random_hermitian_unitary(rng: &mut impl Rng, n_qubits: usize) -> Operator<f64> {
    let d = 1 << n_qubits;
    let u = random_unitary(rng, n_qubits);
    let signs = nalgebra::DVector::from_fn(d, |_, _| Complex::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0));
    let m = u.matrix() * DMatrix::from_diagonal(&signs) * u.matrix().adjoint();
    Operator::from_matrix((&m + m.adjoint()) * Complex::new(0.5, 0.0)).unwrap()
}
