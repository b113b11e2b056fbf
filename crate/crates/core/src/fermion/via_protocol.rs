use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{integrated_kraus, mode_state, trotterized_channel, CoefficientResolution, ModelParams};
use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::estimators::{derived_seed, measure_correlator, CorrelatorEstimate, Method, Route, Sampling};
use crate::protocol::{run_hadamard_test, sample_hadamard_test, AncillaNoise, Bracket, ChannelFactory, HadamardBasis, ProtocolSpec};
use crate::qmat::{Operator, PauliString};
use crate::scalar::{Real, C};

/// How the mode's evolution between `t'` and `t` is built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind<T> {
    /// Closed-form Kraus map, validated against the generator.
    Integrated,
    /// Product of infinitesimal maps with step `dt`.
    Trotter { dt: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolGreen<T> {
    pub estimate: CorrelatorEstimate<T>,
    /// Coefficient variant selected for the integrated map, if one was used.
    pub resolution: Option<CoefficientResolution>,
}

/// Pauli pairs `(O_1 at t', O_2 at t)` and their weights in
/// `G^R = -(i/4) (A_XX + A_YY + i A_XY - i A_YX)`, where
/// `A_PQ = <[P(t'), Q(t)]_+>`.
const PAIRS: [(&str, &str, (f64, f64)); 4] =
    [("X", "X", (0.0, -0.25)), ("Y", "Y", (0.0, -0.25)), ("X", "Y", (0.25, 0.0)), ("Y", "X", (-0.25, 0.0))];

/// Evolution of the mode over `[t', t]` for the requested map.
pub fn mode_channel<T: Real>(
    p: &ModelParams<T>,
    t_prime: T,
    t: T,
    n_ref: T,
    map: MapKind<T>,
) -> Result<(QuantumChannel<T>, Option<CoefficientResolution>)> {
    match map {
        MapKind::Integrated => {
            let m = integrated_kraus(p, t_prime, t, n_ref)?;
            Ok((m.channel, Some(m.resolution)))
        }
        MapKind::Trotter { dt } => Ok((trotterized_channel(p, t_prime, t, dt)?, None)),
    }
}

/// `G^R(t, t') = -i theta(t - t') <[d(t), d^dag(t')]_+>` from four two-point
/// anticommutator protocols with `d = (X + iY)/2`, starting from the mode
/// state with occupation `n_ref` at `t'`.
pub fn green_retarded_via_protocol<T: Real>(
    p: &ModelParams<T>,
    t: T,
    t_prime: T,
    n_ref: T,
    map: MapKind<T>,
    sampling: Sampling,
    route: Route,
) -> Result<ProtocolGreen<T>> {
    if t < t_prime {
        return Err(Error::InvalidArgument(format!("G^R protocol needs t >= t', got t = {t}, t' = {t_prime}")));
    }
    let (channel, resolution) = mode_channel(p, t_prime, t, n_ref, map)?;
    let factory: Arc<dyn ChannelFactory<T>> =
        Arc::new(move |a: T, b: T| if a == b { Ok(QuantumChannel::identity(1, (a, b))) } else { Ok(channel.clone()) });
    let rho = mode_state(n_ref)?;
    let pauli = |s: &str| -> Result<Operator<T>> { Ok(s.parse::<PauliString>()?.to_operator()) };
    let mut estimates = Vec::with_capacity(PAIRS.len());
    for (k, (o1, o2, _)) in PAIRS.iter().enumerate() {
        let spec =
            ProtocolSpec::new(vec![t_prime, t], vec![pauli(o1)?, pauli(o2)?], vec![Bracket::Anticommutator], factory.clone(), rho.clone())?;
        let pair_sampling = match sampling {
            Sampling::Exact => Sampling::Exact,
            Sampling::Shots { shots, seed } => Sampling::Shots { shots, seed: derived_seed(seed, 100 + k) },
        };
        estimates.push(measure_correlator(&spec, pair_sampling, route)?);
    }
    let terms: Vec<(C<T>, &CorrelatorEstimate<T>)> =
        PAIRS.iter().zip(&estimates).map(|((_, _, (cr, ci)), e)| (C::new(T::lit(*cr), T::lit(*ci)), e)).collect();
    Ok(ProtocolGreen { estimate: CorrelatorEstimate::linear_combination(&terms)?, resolution })
}

/// `G^R` from the interferometric baseline: for Hermitian `P`, `Q` the
/// anticommutator is `A_PQ = 2 Re <Q(t) P(t')>`, read off the ancilla's
/// `<Z>` at `alpha = 0`. The ancilla dephases at `noise` between `t'` and
/// `t`.
pub fn green_retarded_via_hadamard<T: Real>(
    p: &ModelParams<T>,
    t: T,
    t_prime: T,
    n_ref: T,
    map: MapKind<T>,
    noise: &AncillaNoise,
    sampling: Sampling,
) -> Result<ProtocolGreen<T>> {
    if t < t_prime {
        return Err(Error::InvalidArgument(format!("G^R needs t >= t', got t = {t}, t' = {t_prime}")));
    }
    let (channel, resolution) = mode_channel(p, t_prime, t, n_ref, map)?;
    let factory: Arc<dyn ChannelFactory<T>> = Arc::new(move |_: T, _: T| Ok(channel.clone()));
    let rho = mode_state(n_ref)?;
    let pauli = |s: &str| -> Result<Operator<T>> { Ok(s.parse::<PauliString>()?.to_operator()) };
    let mut estimates = Vec::with_capacity(PAIRS.len());
    for (k, (o1, o2, _)) in PAIRS.iter().enumerate() {
        let spec =
            ProtocolSpec::new(vec![t_prime, t], vec![pauli(o1)?, pauli(o2)?], vec![Bracket::Anticommutator], factory.clone(), rho.clone())?;
        let (z, var, shots, method) = match sampling {
            Sampling::Exact => (run_hadamard_test(&spec, noise)?.z, T::zero(), 0, Method::Exact),
            Sampling::Shots { shots, seed } => {
                let samples = sample_hadamard_test::<T>(&spec, HadamardBasis::Z, noise, shots, derived_seed(seed, 200 + k))?;
                let n = samples.len() as f64;
                let mean = samples.iter().map(|&v| v as f64).sum::<f64>() / n;
                let var = samples.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                (T::lit(mean), T::lit(var / n), shots, Method::HadamardTest)
            }
        };
        let two = T::lit(2.0);
        estimates.push(CorrelatorEstimate::from_real(two * z, two * two * var, C::new(T::one(), T::zero()), shots, method, Vec::new()));
    }
    let terms: Vec<(C<T>, &CorrelatorEstimate<T>)> =
        PAIRS.iter().zip(&estimates).map(|((_, _, (cr, ci)), e)| (C::new(T::lit(*cr), T::lit(*ci)), e)).collect();
    Ok(ProtocolGreen { estimate: CorrelatorEstimate::linear_combination(&terms)?, resolution })
}
