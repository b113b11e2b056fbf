//! Classical post-processing of protocol outputs into correlator estimates.
//!
//! Every estimator returns the nested bracket
//! `<[O_1, [O_2, ..., O_n]_±]_±>`. Internally the protocol measures the real
//! combination `sum_k i^(...) <...> + c.c.`, which differs from the bracket
//! by a factor `i^(number of commutators)`.

mod aux;
mod correlators;


use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{Bracket, BranchTable, ShotRecord};
use crate::scalar::{i_pow, Real, C};

pub use aux::derived_seed;
pub use aux::{estimate_aux_exact, estimate_aux_sampled, AuxData, AuxQuantity, AuxValue, AuxiliaryPlan};
pub use correlators::{
    estimate_hadamard_exact, estimate_hadamard_sampled, estimate_signed, estimate_three_point, estimate_two_point,
    estimate_two_point_signed, measure_correlator, reference_bracket, Route, Sampling,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ConditionalSubtraction,
    SignedWeight,
    HadamardTest,
    /// Exact branch probabilities and exact auxiliary values.
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ConditionalSubtraction => "conditional_subtraction",
            Self::SignedWeight => "signed_weight",
            Self::HadamardTest => "hadamard_test",
            Self::Exact => "exact",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateFlag {
    /// No shot landed in this outcome branch.
    EmptyBranch { outcomes: Vec<u8> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate<T> {
    pub value: C<T>,
    /// Standard error of the real and imaginary parts.
    pub std_error: C<T>,
    /// Shots over the main and all auxiliary circuits.
    pub shots_used: usize,
    pub method: Method,
    pub flags: Vec<EstimateFlag>,
}

impl<T: Real> CorrelatorEstimate<T> {
    /// `phase * x` for a real estimate `x` with variance of the mean `var`;
    /// `phase` is a power of `i`.
    pub(crate) fn from_real(x: T, var: T, phase: C<T>, shots_used: usize, method: Method, flags: Vec<EstimateFlag>) -> Self {
        let sigma = var.max(T::zero()).sqrt();
        Self { value: phase * x, std_error: C::new(phase.re.abs() * sigma, phase.im.abs() * sigma), shots_used, method, flags }
    }

    /// `sum_k c_k X_k` for independent estimates, with errors added in
    /// quadrature (real and imaginary parts of each input uncorrelated).
    pub fn linear_combination(terms: &[(C<T>, &Self)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let mut value = C::new(T::zero(), T::zero());
        let (mut var_re, mut var_im) = (T::zero(), T::zero());
        let mut shots_used = 0;
        let mut flags = Vec::new();
        for (c, e) in terms {
            value += *c * e.value;
            let (sr, si) = (e.std_error.re * e.std_error.re, e.std_error.im * e.std_error.im);
            var_re += c.re * c.re * sr + c.im * c.im * si;
            var_im += c.im * c.im * sr + c.re * c.re * si;
            shots_used += e.shots_used;
            flags.extend(e.flags.iter().cloned());
        }
        let method = if terms.iter().all(|(_, e)| e.method == first.1.method) { first.1.method } else { Method::SignedWeight };
        Ok(Self { value, std_error: C::new(var_re.sqrt(), var_im.sqrt()), shots_used, method, flags })
    }
}

/// Output of a main protocol run.
#[derive(Clone, Copy, Debug)]
pub enum MainData<'a, T> {
    Exact(&'a BranchTable<T>),
    Sampled(&'a [ShotRecord]),
}

impl<T> MainData<'_, T> {
    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }
}

/// `i^(number of commutators)`: converts the measured combination into the
/// nested bracket.
pub fn bracket_phase<T: Real>(brackets: &[Bracket]) -> C<T> {
    i_pow(brackets.iter().map(|b| b.alpha() as i32).sum())
}

/// Hoeffding shot count for a `±1`-bounded estimator to reach precision
/// `epsilon` with probability `confidence`.
pub fn shots_for_precision(epsilon: f64, confidence: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let n = (2.0 / (1.0 - confidence)).ln() / (2.0 * epsilon * epsilon);
    // Guard against 184.99999999 style roundoff.
    Ok((n - 1e-9).ceil().max(1.0) as u64)
}
