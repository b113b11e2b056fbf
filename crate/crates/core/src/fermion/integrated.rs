use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::quadrature::adaptive_simpson;
use super::{accumulated_phase, dispersion, fermi, generator, infinitesimal_ops, ModelParams};
use crate::channels::{integrate_transfer_matrix, pauli_basis, transfer_of_kraus, ChoiData, Provenance, QuantumChannel};
use crate::error::{Error, Result};
use crate::qmat::{hermitian_eigen, max_abs_diff, Operator};
use crate::scalar::{cabs, re, Real, C};

/// Integration steps per unit time of the reference dynamics used to
/// validate closed-form coefficients.
pub const ORACLE_STEPS_PER_UNIT: f64 = 1000.0;
/// Largest transfer-matrix deviation from the reference that a coefficient
/// variant may show and still be accepted.
pub const VALIDATION_TOL: f64 = 1e-4;

/// Which reading of the closed-form `c`, `alpha`, `beta` coefficients built
/// the integrated map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientResolution {
    /// `c = 1/2 - n + e^{-G tau}(n - 1/2)`, `alpha, beta = sqrt(c -+ (1 - e^{-2 G tau})/2)`.
    PrintedC,
    /// As `PrintedC` with `a` in place of `c` inside `alpha` and `beta`.
    PrintedA,
    /// `c = (1 - e^{-2 G tau})/2 - q`, `alpha = sqrt(2q)`,
    /// `beta = sqrt(2(1 - e^{-2 G tau} - q))`, where `q` is the probability
    /// that an empty mode is filled during the interval.
    PopulationTransfer,
}

impl CoefficientResolution {
    /// Order in which variants are tried.
    pub const ORDER: [Self; 3] = [Self::PrintedC, Self::PrintedA, Self::PopulationTransfer];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PrintedC => "printed_c",
            Self::PrintedA => "printed_a",
            Self::PopulationTransfer => "population_transfer",
        }
    }
}

impl fmt::Display for CoefficientResolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalar coefficients of the integrated map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub alpha: T,
    pub beta: T,
}

/// Integrated map together with the coefficient variant that passed
/// validation.
#[derive(Clone, Debug)]
pub struct IntegratedMap<T: Real> {
    pub channel: QuantumChannel<T>,
    pub resolution: CoefficientResolution,
    pub coefficients: Coefficients<T>,
}

fn checked_sqrt<T: Real>(x: T, expr: &'static str) -> Result<T> {
    if x < -T::tol(1e-12) {
        return Err(Error::NegativeRadicand { expr, value: x.to_f64_lossy() });
    }
    Ok(x.max(T::zero()).sqrt())
}

/// `q(t, t') = int_{t'}^t 2 Gamma n_F(eps(s)) e^{-2 Gamma (t - s)} ds`.
pub(crate) fn population_transfer<T: Real>(p: &ModelParams<T>, t_prime: T, t: T) -> T {
    let two_g = T::lit(2.0) * p.gamma;
    let integrand = |s: T| two_g * fermi(p, dispersion(p, s)) * (-(two_g * (t - s))).exp();
    adaptive_simpson(&integrand, t_prime, t, T::tol(1e-13))
}

fn coefficients<T: Real>(p: &ModelParams<T>, t_prime: T, t: T, n_ref: T, variant: CoefficientResolution) -> Result<Coefficients<T>> {
    let half = T::lit(0.5);
    let tau = t - t_prime;
    let e1 = (-(p.gamma * tau)).exp();
    let e2 = e1 * e1;
    let f = accumulated_phase(p, t, t_prime);
    let a = half * (T::one() + e2);
    let b = f.cos() * e1;
    let d = e1 * f.sin();
    let loss = half * (T::one() - e2);
    let printed_c = half - n_ref + e1 * (n_ref - half);
    let (c, alpha_sq, beta_sq) = match variant {
        CoefficientResolution::PrintedC => (printed_c, printed_c - loss, printed_c + loss),
        CoefficientResolution::PrintedA => (printed_c, a - loss, a + loss),
        CoefficientResolution::PopulationTransfer => {
            let q = population_transfer(p, t_prime, t);
            let two = T::lit(2.0);
            (loss - q, two * q, two * (T::one() - e2 - q))
        }
    };
    Ok(Coefficients { a, b, c, d, alpha: checked_sqrt(alpha_sq, "alpha^2")?, beta: checked_sqrt(beta_sq, "beta^2")? })
}

/// `(A_1, B_1)` and `(A_2, B_2)` of the two diagonal Kraus operators.
fn diagonal_pair<T: Real>(co: &Coefficients<T>) -> Result<[(C<T>, C<T>); 2]> {
    let Coefficients { a, b, c, d, .. } = *co;
    let r = (b * b + c * c + d * d).sqrt();
    let z = C::new(c, d);
    if cabs(z) > T::tol(1e-6) * r.max(T::one()) {
        let two_z = z * re(T::lit(2.0));
        let lower = re(checked_sqrt(a - r, "a - R")?);
        let upper = re(checked_sqrt(a + r, "a + R")?);
        let inv_plus = re((T::one() / (b / r + T::one())).sqrt());
        let inv_minus = re((T::one() / (T::one() - b / r)).sqrt());
        let (br, rc) = (re(b), re(r));
        let a1 = (br - rc + z) * lower / (two_z * inv_plus);
        let b1 = -((rc - br + z) * lower / (two_z * inv_plus));
        let a2 = (rc + br + z) * upper / (two_z * inv_minus);
        let b2 = (rc + br - z) * upper / (two_z * inv_minus);
        return Ok([(a1, b1), (a2, b2)]);
    }
    // Near c + id = 0 the closed form is 0/0; factor the Gram matrix
    // [[a + c, b + id], [b - id, a - c]] directly instead.
    let gram = DMatrix::from_row_slice(2, 2, &[re(a + c), C::new(b, d), C::new(b, -d), re(a - c)]);
    let (values, vectors) = hermitian_eigen(&gram);
    let mut pair = [(re(T::zero()), re(T::zero())); 2];
    for (j, slot) in pair.iter_mut().enumerate() {
        let w = re(checked_sqrt(values[j], "a - R")?);
        *slot = (vectors[(0, j)] * w, vectors[(1, j)] * w);
    }
    Ok(pair)
}

/// Integrated map built from one coefficient variant, without validation
/// against the reference dynamics.
pub fn integrated_kraus_variant<T: Real>(
    p: &ModelParams<T>,
    t_prime: T,
    t: T,
    n_ref: T,
    variant: CoefficientResolution,
) -> Result<(QuantumChannel<T>, Coefficients<T>)> {
    p.validate()?;
    if t < t_prime {
        return Err(Error::InvalidArgument(format!("integrated map needs t >= t', got t = {t}, t' = {t_prime}")));
    }
    let co = coefficients(p, t_prime, t, n_ref, variant)?;
    let [(a1, b1), (a2, b2)] = diagonal_pair(&co)?;
    let zero = re(T::zero());
    let x = T::one() / T::lit(2.0).sqrt();
    let ops = [[a1, zero, zero, b1], [a2, zero, zero, b2], [zero, zero, re(co.alpha * x), zero], [zero, re(co.beta * x), zero, zero]];
    let kraus: Vec<Operator<T>> =
        ops.iter().filter(|m| m.iter().any(|z| *z != zero)).map(|m| Operator::from_row_slice(2, m).expect("2x2 entries")).collect();
    let kraus = if kraus.is_empty() { vec![Operator::zeros(1)] } else { kraus };
    Ok((QuantumChannel::new(kraus, (t_prime, t), Provenance::Analytic)?, co))
}

/// Transfer matrix of `steps` infinitesimal maps over `[t', t]`, each with
/// the level evaluated at the step midpoint.
pub fn composed_transfer<T: Real>(p: &ModelParams<T>, t_prime: T, t: T, steps: usize) -> Result<DMatrix<C<T>>> {
    let basis = pauli_basis::<T>(1);
    let mut f = DMatrix::<C<T>>::identity(4, 4);
    if t <= t_prime {
        return Ok(f);
    }
    let steps = steps.max(1);
    let dt = (t - t_prime) / T::from_usize(steps).expect("step count");
    let half = T::lit(0.5);
    for k in 0..steps {
        let mid = t_prime + dt * (T::from_usize(k).expect("step index") + half);
        let ops = infinitesimal_ops(p, dispersion(p, mid), dt)?;
        f = transfer_of_kraus(&ops, &basis) * f;
    }
    Ok(f)
}

fn oracle_steps<T: Real>(t_prime: T, t: T) -> usize {
    ((t - t_prime).to_f64_lossy() * ORACLE_STEPS_PER_UNIT).ceil().max(1.0) as usize
}

/// Closed-form map `V_{t,t'}` for the mode.
///
/// Each coefficient variant is tried in [`CoefficientResolution::ORDER`];
/// the first whose action matches the transfer matrix integrated from the
/// generator within [`VALIDATION_TOL`] is returned. `n_ref` is the occupation at `t'`
/// and only enters the printed variants.
pub fn integrated_kraus<T: Real>(p: &ModelParams<T>, t_prime: T, t: T, n_ref: T) -> Result<IntegratedMap<T>> {
    let mut reasons = Vec::new();
    let mut reference: Option<DMatrix<C<T>>> = None;
    for variant in CoefficientResolution::ORDER {
        let (channel, coefficients) = match integrated_kraus_variant(p, t_prime, t, n_ref, variant) {
            Ok(built) => built,
            Err(err) => {
                reasons.push(format!("{variant}: {err}"));
                continue;
            }
        };
        if reference.is_none() {
            let data = integrate_transfer_matrix(&generator(p), t_prime, t, oracle_steps(t_prime, t))?;
            reference = Some(data.transfer().clone());
        }
        let deviation = max_abs_diff(&channel.transfer_matrix(), reference.as_ref().expect("computed above"));
        if deviation <= T::tol(VALIDATION_TOL) {
            return Ok(IntegratedMap { channel, resolution: variant, coefficients });
        }
        reasons.push(format!("{variant}: deviates from reference dynamics by {:e}", deviation.to_f64_lossy()));
    }
    Err(Error::NoValidCoefficients(reasons.join("; ")))
}

/// Mode dynamics over `[t', t]` from infinitesimal maps of step at most
/// `dt`, converted to Kraus form through the Choi matrix.
pub fn trotterized_channel<T: Real>(p: &ModelParams<T>, t_prime: T, t: T, dt: T) -> Result<QuantumChannel<T>> {
    p.validate()?;
    if t < t_prime {
        return Err(Error::InvalidArgument("trotterized map needs t >= t'".into()));
    }
    if !dt.is_finite() || dt <= T::zero() {
        return Err(Error::InvalidArgument(format!("Trotter step must be positive, got {dt}")));
    }
    if t == t_prime {
        return Ok(QuantumChannel::identity(1, (t_prime, t)));
    }
    let steps = ((t - t_prime) / dt - T::lit(1e-9)).ceil().to_f64_lossy().max(1.0) as usize;
    let f = composed_transfer(p, t_prime, t, steps)?;
    ChoiData::from_transfer(f, (t_prime, t))?.to_channel(Provenance::Trotterized)
}
