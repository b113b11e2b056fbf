use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{run_circuit_exact, run_circuit_sampled, Action, Circuit, ProtocolSpec};
use crate::scalar::Real;

/// Expectation value measured by one auxiliary circuit.
///
/// Indices are zero-based positions in the protocol's operator list. Every
/// operator before `target` is either idle, conjugated (`rho -> O rho O`) or,
/// for two-point terms, used as the single ancilla control.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxQuantity {
    /// `Tr(O_target V[... ρ ...])` with the listed operators conjugated.
    OnePoint { target: usize, conjugated: Vec<usize> },
    /// `i^α Tr(O_target V[... O_control ρ ...]) + c.c.`, with `α` taken
    /// from the control's bracket.
    TwoPoint { control: usize, target: usize, conjugated: Vec<usize> },
}

impl AuxQuantity {
    pub fn one_point(target: usize, conjugated: &[usize]) -> Self {
        Self::OnePoint { target, conjugated: conjugated.to_vec() }
    }

    pub fn two_point(control: usize, target: usize, conjugated: &[usize]) -> Self {
        Self::TwoPoint { control, target, conjugated: conjugated.to_vec() }
    }

    pub fn target(&self) -> usize {
        match self {
            Self::OnePoint { target, .. } | Self::TwoPoint { target, .. } => *target,
        }
    }

    /// Circuit over the spec's times `t_0..=t_target` measuring this quantity.
    pub fn circuit<T: Real>(&self, spec: &ProtocolSpec<T>) -> Result<Circuit<T>> {
        let target = self.target();
        if target >= spec.n() {
            return Err(Error::InvalidSpec(format!("{self} refers past the last operator")));
        }
        let (control, conjugated) = match self {
            Self::OnePoint { conjugated, .. } => (None, conjugated),
            Self::TwoPoint { control, conjugated, .. } => (Some(*control), conjugated),
        };
        let actions = (0..target)
            .map(|j| {
                if control == Some(j) {
                    Action::Control { op: spec.ops()[j].clone(), bracket: spec.brackets()[j] }
                } else if conjugated.contains(&j) {
                    Action::Conjugate { op: spec.ops()[j].clone() }
                } else {
                    Action::Idle
                }
            })
            .collect();
        spec.derived_circuit(spec.times()[..=target].to_vec(), actions, spec.ops()[target].clone())
    }
}

fn subscript(conjugated: &[usize]) -> String {
    if conjugated.is_empty() {
        return String::new();
    }
    let names: Vec<_> = conjugated.iter().map(|j| format!("O{}", j + 1)).collect();
    format!("_{{{}}}", names.join(","))
}

impl fmt::Display for AuxQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OnePoint { target, conjugated } => write!(f, "<O{}>{}", target + 1, subscript(conjugated)),
            Self::TwoPoint { control, target, conjugated } => {
                write!(f, "<O{}O{}>{}+c.c.", target + 1, control + 1, subscript(conjugated))
            }
        }
    }
}

/// Auxiliary circuits needed by the conditional-subtraction estimator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxiliaryPlan {
    /// Quantities entering the branch normalization.
    pub normalization: Vec<AuxQuantity>,
    /// Lower-order terms mixed into the main measurement.
    pub remainder: Vec<AuxQuantity>,
}

impl AuxiliaryPlan {
    pub fn two_point() -> Self {
        Self {
            normalization: vec![AuxQuantity::one_point(0, &[])],
            remainder: vec![AuxQuantity::one_point(1, &[]), AuxQuantity::one_point(1, &[0])],
        }
    }

    pub fn three_point() -> Self {
        use AuxQuantity as Q;
        Self {
            normalization: vec![Q::one_point(0, &[]), Q::one_point(1, &[]), Q::one_point(1, &[0]), Q::two_point(0, 1, &[])],
            remainder: vec![
                Q::one_point(2, &[]),
                Q::one_point(2, &[0]),
                Q::one_point(2, &[1]),
                Q::one_point(2, &[0, 1]),
                Q::two_point(0, 2, &[]),
                Q::two_point(0, 2, &[1]),
                Q::two_point(1, 2, &[]),
                Q::two_point(1, 2, &[0]),
            ],
        }
    }

    /// Plan for an `n`-point protocol; only `n = 2, 3` are supported.
    pub fn for_order(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Self::two_point()),
            3 => Ok(Self::three_point()),
            _ => Err(Error::InvalidArgument(format!("no auxiliary plan for n = {n}"))),
        }
    }

    /// Every circuit of the plan, normalization first.
    pub fn entries(&self) -> impl Iterator<Item = &AuxQuantity> {
        self.normalization.iter().chain(&self.remainder)
    }

    pub fn len(&self) -> usize {
        self.normalization.len() + self.remainder.len()
    }

    /// Circuits to run in total: the main one plus every auxiliary one.
    pub fn measurement_count(&self) -> usize {
        self.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of individual trace terms in the remainder (each two-point
    /// entry carries a term and its conjugate).
    pub fn remainder_terms(&self) -> usize {
        self.remainder
            .iter()
            .map(|q| match q {
                AuxQuantity::OnePoint { .. } => 1,
                AuxQuantity::TwoPoint { .. } => 2,
            })
            .sum()
    }
}

/// Estimate of one auxiliary quantity. `shots == 0` marks an exact value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxValue<T> {
    pub value: T,
    /// Per-shot sample variance.
    pub variance: T,
    pub shots: usize,
}

impl<T: Real> AuxValue<T> {
    pub fn exact(value: T) -> Self {
        Self { value, variance: T::zero(), shots: 0 }
    }

    /// Variance of the mean.
    pub fn mean_variance(&self) -> T {
        if self.shots == 0 {
            T::zero()
        } else {
            self.variance / T::from_usize(self.shots).unwrap()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxData<T> {
    values: BTreeMap<AuxQuantity, AuxValue<T>>,
}

impl<T: Real> AuxData<T> {
    pub fn new() -> Self {
        Self { values: BTreeMap::new() }
    }

    pub fn insert(&mut self, q: AuxQuantity, v: AuxValue<T>) {
        self.values.insert(q, v);
    }

    pub fn get(&self, q: &AuxQuantity) -> Result<&AuxValue<T>> {
        self.values.get(q).ok_or_else(|| Error::MissingAux(q.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AuxQuantity, &AuxValue<T>)> {
        self.values.iter()
    }

    pub fn total_shots(&self) -> usize {
        self.values.values().map(|v| v.shots).sum()
    }
}

/// Evaluates every plan entry by exact branch enumeration.
pub fn estimate_aux_exact<T: Real>(spec: &ProtocolSpec<T>, plan: &AuxiliaryPlan) -> Result<AuxData<T>> {
    let mut data = AuxData::new();
    for q in plan.entries() {
        let table = run_circuit_exact(&q.circuit(spec)?)?;
        let value = match q {
            AuxQuantity::OnePoint { .. } => table.mean_final(),
            AuxQuantity::TwoPoint { .. } => T::lit(2.0) * table.signed_mean(),
        };
        data.insert(q.clone(), AuxValue::exact(value));
    }
    Ok(data)
}

/// Seed for the `k`-th auxiliary circuit of a run seeded with `seed`.
pub fn derived_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Samples every plan entry with `shots` shots; one-point circuits are plain
/// means and two-point circuits use the signed estimator `2 (-1)^m f`.
pub fn estimate_aux_sampled<T: Real>(spec: &ProtocolSpec<T>, plan: &AuxiliaryPlan, shots: usize, seed: u64) -> Result<AuxData<T>> {
    let mut data = AuxData::new();
    for (k, q) in plan.entries().enumerate() {
        let records = run_circuit_sampled::<T>(&q.circuit(spec)?, shots, derived_seed(seed, k))?;
        let samples: Vec<f64> = records
            .iter()
            .map(|r| match q {
                AuxQuantity::OnePoint { .. } => r.final_value as f64,
                AuxQuantity::TwoPoint { .. } => 2.0 * (r.outcome_sign() * r.final_value) as f64,
            })
            .collect();
        let (mean, var) = mean_and_variance(&samples);
        data.insert(q.clone(), AuxValue { value: T::lit(mean), variance: T::lit(var), shots });
    }
    Ok(data)
}

/// Mean and unbiased sample variance (zero for fewer than two samples).
pub(crate) fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
