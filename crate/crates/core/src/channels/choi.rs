use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::lindblad::{generator_action, LindbladGenerator};
use super::{Provenance, QuantumChannel};
use crate::error::{Error, Result};
use crate::qmat::{hermitian_eigen, max_abs_diff, trace_product, DensityMatrix, Operator, PauliString};
use crate::scalar::{cabs, i_pow, re, Real, C};

/// Eigenvalues of a Choi matrix below `-CHOI_POSITIVITY_TOL` are rejected.
pub const CHOI_POSITIVITY_TOL: f64 = 1e-8;
/// Looser positivity bound applied right after numerical integration.
pub const CHOI_INTEGRATION_TOL: f64 = 1e-6;

/// Default number of integration steps: 10^3 per unit time.
pub fn default_steps(from: f64, to: f64) -> usize {
    ((to - from).abs() * 1000.0).ceil().max(1.0) as usize
}

/// Normalized Pauli basis `P_a / sqrt(d)` in index order.
pub fn pauli_basis<T: Real>(n_qubits: usize) -> Vec<DMatrix<C<T>>> {
    let d = 1usize << n_qubits;
    let norm = re(T::one() / T::from_usize(d).expect("dimension").sqrt());
    (0..d * d).map(|a| PauliString::from_index(n_qubits, a).to_operator::<T>().into_matrix() * norm).collect()
}

/// Applies a transfer matrix to a state through its Pauli coefficients.
pub fn apply_transfer<T: Real>(f: &DMatrix<C<T>>, rho: &DensityMatrix<T>) -> Result<DMatrix<C<T>>> {
    let basis = pauli_basis::<T>(rho.n_qubits());
    if f.nrows() != basis.len() || f.ncols() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), found: f.nrows() });
    }
    let coeffs = DVector::from_iterator(basis.len(), basis.iter().map(|s| trace_product(s, rho.matrix()).expect("matching dims")));
    let out = f * coeffs;
    let d = rho.dim();
    Ok(basis.iter().zip(out.iter()).fold(DMatrix::zeros(d, d), |acc, (s, c)| acc + s * *c))
}

/// `F_rs = sum_i Tr[sigma_r K_i sigma_s K_i^dag]`.
pub(crate) fn transfer_of_kraus<T: Real>(kraus: &[DMatrix<C<T>>], basis: &[DMatrix<C<T>>]) -> DMatrix<C<T>> {
    let n = basis.len();
    let mut f = DMatrix::zeros(n, n);
    for (s, sigma_s) in basis.iter().enumerate() {
        let d = sigma_s.nrows();
        let image = kraus.iter().fold(DMatrix::zeros(d, d), |acc: DMatrix<C<T>>, k| acc + k * sigma_s * k.adjoint());
        for (r, sigma_r) in basis.iter().enumerate() {
            f[(r, s)] = trace_product(sigma_r, &image).expect("square basis");
        }
    }
    f
}

fn generator_transfer<T: Real>(gen: &LindbladGenerator<T>, basis: &[DMatrix<C<T>>], t: T) -> Result<DMatrix<C<T>>> {
    let (h, jumps) = gen.operators_at(t)?;
    let n = basis.len();
    let mut l = DMatrix::zeros(n, n);
    for (s, sigma_s) in basis.iter().enumerate() {
        let image = generator_action(&h, &jumps, sigma_s);
        for (r, sigma_r) in basis.iter().enumerate() {
            l[(r, s)] = trace_product(sigma_r, &image)?;
        }
    }
    Ok(l)
}

/// Transfer matrix and Choi matrix of a channel over an interval.
#[derive(Clone, Debug)]
pub struct ChoiData<T: Real> {
    transfer: DMatrix<C<T>>,
    choi: DMatrix<C<T>>,
    n_qubits: usize,
    interval: (T, T),
}

impl<T: Real> ChoiData<T> {
    /// Builds the Choi matrix `S_ab = sum_rs F_sr Tr[s_r s_a s_s s_b]`.
    pub fn from_transfer(transfer: DMatrix<C<T>>, interval: (T, T)) -> Result<Self> {
        let n = transfer.nrows();
        if transfer.ncols() != n {
            return Err(Error::NotSquare { rows: n, cols: transfer.ncols() });
        }
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n || !d.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let n_qubits = d.trailing_zeros() as usize;
        let strings: Vec<PauliString> = (0..n).map(|a| PauliString::from_index(n_qubits, a)).collect();
        let inv_d = re(T::one() / T::from_usize(d).expect("dimension"));
        let mut choi = DMatrix::zeros(n, n);
        for (a, pa) in strings.iter().enumerate() {
            for (s, ps) in strings.iter().enumerate() {
                let left = pa * ps;
                for (b, pb) in strings.iter().enumerate() {
                    let q = &left * pb;
                    choi[(a, b)] += transfer[(s, q.index())] * i_pow::<T>(q.phase() as i32);
                }
            }
        }
        choi *= inv_d;
        Ok(Self { transfer, choi, n_qubits, interval })
    }

    pub fn of_channel(ch: &QuantumChannel<T>) -> Result<Self> {
        Self::from_transfer(ch.transfer_matrix(), ch.interval())
    }

    pub fn transfer(&self) -> &DMatrix<C<T>> {
        &self.transfer
    }

    pub fn choi(&self) -> &DMatrix<C<T>> {
        &self.choi
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn interval(&self) -> (T, T) {
        self.interval
    }

    pub fn hermiticity_defect(&self) -> T {
        max_abs_diff(&self.choi, &self.choi.adjoint())
    }

    pub fn min_eigenvalue(&self) -> T {
        crate::qmat::hermitian_eigen(&crate::qmat::hermitize(&self.choi)).0.min()
    }

    /// Checks Hermiticity within `1e-9` and eigenvalues above `-tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.hermiticity_defect() > T::tol(1e-9) {
            return Err(Error::InvalidArgument("Choi matrix is not Hermitian".into()));
        }
        let min = self.min_eigenvalue();
        if min < -T::tol(tol) {
            return Err(Error::ChoiNotPositive { min_eigenvalue: min.to_f64_lossy() });
        }
        Ok(())
    }

    /// Kraus decomposition tagged with `provenance`.
    pub fn to_channel(&self, provenance: Provenance) -> Result<QuantumChannel<T>> {
        self.validate(CHOI_POSITIVITY_TOL)?;
        let (values, vectors) = hermitian_eigen(&crate::qmat::hermitize(&self.choi));
        let trace = values.iter().fold(T::zero(), |a, v| a + v.max(T::zero()));
        let cut = T::lit(1e-14).max(T::default_epsilon() * T::lit(16.0)) * trace;

        let mut modes: Vec<(T, Vec<C<T>>)> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > cut)
            .map(|(i, v)| (*v, fix_phase(vectors.column(i).iter().copied().collect())))
            .collect();
        let tie = T::lit(1e-12).max(T::default_epsilon() * T::lit(64.0)) * trace;
        modes.sort_by(|x, y| {
            if (x.0 - y.0).abs() > tie {
                return y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal);
            }
            lexicographic(&x.1, &y.1)
        });

        let basis = pauli_basis::<T>(self.n_qubits);
        let d = 1usize << self.n_qubits;
        let kraus: Vec<DMatrix<C<T>>> = modes
            .iter()
            .map(|(lambda, v)| {
                let amp = re(lambda.sqrt());
                basis.iter().zip(v).fold(DMatrix::zeros(d, d), |acc, (s, x)| acc + s * (*x * amp))
            })
            .collect();
        let kraus = renormalize(kraus)?;
        QuantumChannel::new(kraus.into_iter().map(Operator::from_matrix_unchecked).collect(), self.interval, provenance)
    }
}

/// Rotates the vector so its largest component is real and positive.
fn fix_phase<T: Real>(mut v: Vec<C<T>>) -> Vec<C<T>> {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if cabs(*z) > cabs(v[best]) * (T::one() + T::lit(1e-9)) {
            best = i;
        }
    }
    let norm = cabs(v[best]);
    if norm > T::zero() {
        let phase = v[best].conj() / Complex::new(norm, T::zero());
        for z in &mut v {
            *z *= phase;
        }
    }
    v
}

fn lexicographic<T: Real>(a: &[C<T>], b: &[C<T>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = y.re.partial_cmp(&x.re).unwrap_or(Ordering::Equal).then(y.im.partial_cmp(&x.im).unwrap_or(Ordering::Equal));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Restores `sum K^dag K = I` by right-multiplying with `M^{-1/2}`.
fn renormalize<T: Real>(kraus: Vec<DMatrix<C<T>>>) -> Result<Vec<DMatrix<C<T>>>> {
    let d = kraus[0].nrows();
    let m = kraus.iter().fold(DMatrix::zeros(d, d), |acc: DMatrix<C<T>>, k| acc + k.adjoint() * k);
    let defect = max_abs_diff(&m, &DMatrix::identity(d, d));
    let limit = T::tol(1e-6);
    if defect > limit {
        return Err(Error::Completeness { defect: defect.to_f64_lossy(), tolerance: limit.to_f64_lossy() });
    }
    let (values, vectors) = hermitian_eigen(&crate::qmat::hermitize(&m));
    let inv_sqrt = DMatrix::from_diagonal(&values.map(|v| re(T::one() / v.sqrt())));
    let correction = &vectors * inv_sqrt * vectors.adjoint();
    Ok(kraus.into_iter().map(|k| k * &correction).collect())
}

/// Kraus operators of the channel whose Choi data is given.
pub fn kraus_from_choi<T: Real>(data: &ChoiData<T>) -> Result<QuantumChannel<T>> {
    data.to_channel(Provenance::FromChoi)
}

/// Integrates `dF/dt = L(t) F` with fixed-step RK4 from the identity.
pub fn integrate_transfer_matrix<T: Real>(gen: &LindbladGenerator<T>, from: T, to: T, steps: usize) -> Result<ChoiData<T>> {
    if to < from {
        return Err(Error::InvalidArgument("integration interval runs backwards".into()));
    }
    let basis = pauli_basis::<T>(gen.n_qubits());
    let n = basis.len();
    let mut f = DMatrix::<C<T>>::identity(n, n);
    if to > from {
        let steps = steps.max(1);
        let h = (to - from) / T::from_usize(steps).expect("step count");
        let half = h * T::lit(0.5);
        let hc = re(h);
        let sixth = re(h / T::lit(6.0));
        let two = re(T::lit(2.0));
        let half_c = re(half);
        let mut l_start = generator_transfer(gen, &basis, from)?;
        for k in 0..steps {
            let t = from + h * T::from_usize(k).expect("step index");
            let l_mid = generator_transfer(gen, &basis, t + half)?;
            let l_end = generator_transfer(gen, &basis, t + h)?;
            let k1 = &l_start * &f;
            let k2 = &l_mid * (&f + &k1 * half_c);
            let k3 = &l_mid * (&f + &k2 * half_c);
            let k4 = &l_end * (&f + &k3 * hc);
            f += (k1 + (k2 + k3) * two + k4) * sixth;
            l_start = l_end;
        }
    }
    let data = ChoiData::from_transfer(f, (from, to))?;
    data.validate(CHOI_INTEGRATION_TOL)?;
    Ok(data)
}
