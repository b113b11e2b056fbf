#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nptcorr::channels::{Provenance, QuantumChannel};
use nptcorr::protocol::{Bracket, ChannelFactory};
use nptcorr::qmat::{DensityMatrix, Operator, PauliString};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M = DMatrix<Complex<f64>>;
pub type Cx = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> M {
    DMatrix::from_fn(rows, cols, |_, _| Complex::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

pub fn random_density(r: &mut impl Rng, n_qubits: usize) -> DensityMatrix<f64> {
    let d = 1 << n_qubits;
    let a = gaussian_matrix(r, d, d);
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

pub fn random_unitary(r: &mut impl Rng, n_qubits: usize) -> Operator<f64> {
    let d = 1 << n_qubits;
    Operator::from_matrix(gaussian_matrix(r, d, d).qr().q()).unwrap()
}

pub fn random_channel(r: &mut impl Rng, n_qubits: usize, n_kraus: usize, interval: (f64, f64)) -> QuantumChannel<f64> {
    let d = 1 << n_qubits;
    let q = gaussian_matrix(r, d * n_kraus, d).qr().q();
    let kraus = (0..n_kraus).map(|k| Operator::from_matrix(q.rows(k * d, d).into_owned()).unwrap()).collect();
    QuantumChannel::new(kraus, interval, Provenance::Composed).unwrap()
}

pub fn random_pauli(r: &mut impl Rng, n_qubits: usize) -> Operator<f64> {
    let letters = ['I', 'X', 'Y', 'Z'];
    let mut s: String = if r.random_bool(0.5) { "-".into() } else { String::new() };
    for _ in 0..n_qubits {
        s.push(letters[r.random_range(0..4)]);
    }
    s.parse::<PauliString>().unwrap().to_operator()
}

pub fn random_hermitian_unitary(r: &mut impl Rng, n_qubits: usize) -> Operator<f64> {
    let d = 1 << n_qubits;
    let u = random_unitary(r, n_qubits);
    let signs = DVector::from_fn(d, |_, _| Complex::new(if r.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0));
    let m = u.matrix() * DMatrix::from_diagonal(&signs) * u.matrix().adjoint();
    Operator::from_matrix((&m + m.adjoint()) * Complex::new(0.5, 0.0)).unwrap()
}

pub fn pauli(s: &str) -> Operator<f64> {
    s.parse::<PauliString>().unwrap().to_operator()
}

/// Factory returning `chs[k]` for the interval starting at `times[k]`.
pub fn table_factory(times: Vec<f64>, chs: Vec<QuantumChannel<f64>>) -> Arc<dyn ChannelFactory<f64>> {
    Arc::new(move |a: f64, _: f64| Ok(chs[times.iter().position(|&t| t == a).expect("known interval")].clone()))
}

fn sign(b: Bracket) -> f64 {
    match b {
        Bracket::Anticommutator => 1.0,
        Bracket::Commutator => -1.0,
    }
}

fn tr(a: &M, b: &M) -> Cx {
    (a * b).trace()
}

/// `<[O_1(t_1), O_2(t_2)]_±>` from `Tr(O_2 V[rho O_1]) ± Tr(O_2 V[O_1 rho])`.
pub fn two_point_oracle(rho: &M, o1: &M, v: &QuantumChannel<f64>, o2: &M, b: Bracket) -> Cx {
    tr(o2, &v.apply_matrix(&(rho * o1))) + tr(o2, &v.apply_matrix(&(o1 * rho))) * sign(b)
}

/// `<[O_1, [O_2, O_3]_±]_±>` from `<O3 O2 O1>`, `<O1 O3 O2>` and their
/// conjugates, each evaluated as a nested trace.
pub fn three_point_oracle(rho: &M, o: [&M; 3], v21: &QuantumChannel<f64>, v32: &QuantumChannel<f64>, b: [Bracket; 2]) -> Cx {
    let w321 = tr(o[2], &v32.apply_matrix(&(o[1] * v21.apply_matrix(&(o[0] * rho)))));
    let w132 = tr(o[2], &v32.apply_matrix(&(o[1] * v21.apply_matrix(&(rho * o[0])))));
    w321.conj() + w132 * sign(b[1]) + w132.conj() * sign(b[0]) + w321 * sign(b[0]) * sign(b[1])
}
