use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use super::Bracket;
use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::qmat::{DensityMatrix, Operator};
use crate::scalar::Real;

/// Source of the system evolution `V_{to, from}`.
pub trait ChannelFactory<T: Real>: Send + Sync {
    fn channel(&self, from: T, to: T) -> Result<QuantumChannel<T>>;
}

impl<T: Real, F> ChannelFactory<T> for F
where
    F: Fn(T, T) -> Result<QuantumChannel<T>> + Send + Sync,
{
    fn channel(&self, from: T, to: T) -> Result<QuantumChannel<T>> {
        self(from, to)
    }
}

/// Memoizes another factory by interval.
pub struct CachedFactory<T: Real> {
    inner: Arc<dyn ChannelFactory<T>>,
    cache: Mutex<HashMap<(u64, u64), QuantumChannel<T>>>,
}

impl<T: Real> CachedFactory<T> {
    pub fn new(inner: Arc<dyn ChannelFactory<T>>) -> Self {
        Self { inner, cache: Mutex::new(HashMap::new()) }
    }
}

impl<T: Real> ChannelFactory<T> for CachedFactory<T> {
    fn channel(&self, from: T, to: T) -> Result<QuantumChannel<T>> {
        let key = (from.to_f64_lossy().to_bits(), to.to_f64_lossy().to_bits());
        if let Some(ch) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(ch.clone());
        }
        let ch = self.inner.channel(from, to)?;
        self.cache.lock().expect("cache lock").insert(key, ch.clone());
        Ok(ch)
    }
}

/// What happens to the system at one of the circuit times.
#[derive(Clone, Debug)]
pub enum Action<T: Real> {
    /// Ancilla-controlled `O` followed by `S^alpha H` and an ancilla
    /// measurement; contributes one outcome bit.
    Control {
        op: Operator<T>,
        bracket: Bracket,
    },
    /// `rho -> O rho O`.
    Conjugate {
        op: Operator<T>,
    },
    Idle,
}

/// Sequence of actions at non-decreasing times, ending with a projective
/// measurement of `measure` at the last time.
#[derive(Clone)]
pub struct Circuit<T: Real> {
    times: Vec<T>,
    actions: Vec<Action<T>>,
    measure: Operator<T>,
    initial_state: DensityMatrix<T>,
    factory: Arc<dyn ChannelFactory<T>>,
}

impl<T: Real> fmt::Debug for Circuit<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Circuit")
            .field("times", &self.times)
            .field("actions", &self.actions)
            .field("measure", &self.measure.label())
            .finish()
    }
}

fn check_hermitian_unitary<T: Real>(op: &Operator<T>, dim: usize) -> Result<()> {
    if op.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: op.dim() });
    }
    let tol = T::tol(1e-10);
    if !op.is_hermitian(tol) || !op.is_unitary(tol) {
        return Err(Error::NotHermitianUnitary { label: op.display_label() });
    }
    Ok(())
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidSpec("at least one time is required".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidSpec("times must be finite".into()));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] < w[0]) {
        return Err(Error::InvalidSpec(format!("times must be non-decreasing, got {} after {}", w[1], w[0])));
    }
    Ok(())
}

impl<T: Real> Circuit<T> {
    pub fn new(
        times: Vec<T>,
        actions: Vec<Action<T>>,
        measure: Operator<T>,
        initial_state: DensityMatrix<T>,
        factory: Arc<dyn ChannelFactory<T>>,
    ) -> Result<Self> {
        check_times(&times)?;
        if actions.len() + 1 != times.len() {
            return Err(Error::InvalidSpec(format!("{} times need {} actions, got {}", times.len(), times.len() - 1, actions.len())));
        }
        let dim = initial_state.dim();
        for action in &actions {
            match action {
                Action::Control { op, .. } | Action::Conjugate { op } => check_hermitian_unitary(op, dim)?,
                Action::Idle => {}
            }
        }
        check_hermitian_unitary(&measure, dim)?;
        Ok(Self { times, actions, measure, initial_state, factory })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn actions(&self) -> &[Action<T>] {
        &self.actions
    }

    pub fn measure(&self) -> &Operator<T> {
        &self.measure
    }

    pub fn initial_state(&self) -> &DensityMatrix<T> {
        &self.initial_state
    }

    pub fn factory(&self) -> &Arc<dyn ChannelFactory<T>> {
        &self.factory
    }

    /// Number of ancilla measurements per shot.
    pub fn n_controls(&self) -> usize {
        self.actions.iter().filter(|a| matches!(a, Action::Control { .. })).count()
    }

    /// Evolution channels between consecutive times; `None` for empty
    /// intervals.
    pub(crate) fn channels(&self) -> Result<Vec<Option<QuantumChannel<T>>>> {
        self.times
            .windows(2)
            .map(|w| {
                if w[1] == w[0] {
                    return Ok(None);
                }
                let ch = self.factory.channel(w[0], w[1])?;
                if ch.dim() != self.initial_state.dim() {
                    return Err(Error::DimensionMismatch { expected: self.initial_state.dim(), found: ch.dim() });
                }
                Ok(Some(ch))
            })
            .collect()
    }
}

/// Configuration of an n-point measurement: times `t_1 <= ... <= t_n`,
/// Hermitian unitary operators `O_1..O_n`, one bracket per controlled step,
/// the evolution and the state at `t_1`.
#[derive(Clone, Debug)]
pub struct ProtocolSpec<T: Real> {
    circuit: Circuit<T>,
    ops: Vec<Operator<T>>,
    brackets: Vec<Bracket>,
}

impl<T: Real> ProtocolSpec<T> {
    pub fn new(
        times: Vec<T>,
        ops: Vec<Operator<T>>,
        brackets: Vec<Bracket>,
        factory: Arc<dyn ChannelFactory<T>>,
        initial_state: DensityMatrix<T>,
    ) -> Result<Self> {
        if ops.len() != times.len() {
            return Err(Error::InvalidSpec(format!("{} times but {} operators", times.len(), ops.len())));
        }
        if brackets.len() + 1 != times.len() {
            return Err(Error::InvalidSpec(format!(
                "{} times need {} phase choices, got {}",
                times.len(),
                times.len().saturating_sub(1),
                brackets.len()
            )));
        }
        let n = ops.len();
        let actions =
            ops[..n - 1].iter().zip(&brackets).map(|(op, bracket)| Action::Control { op: op.clone(), bracket: *bracket }).collect();
        let circuit = Circuit::new(times, actions, ops[n - 1].clone(), initial_state, factory)?;
        Ok(Self { circuit, ops, brackets })
    }

    pub fn n(&self) -> usize {
        self.ops.len()
    }

    pub fn times(&self) -> &[T] {
        self.circuit.times()
    }

    pub fn ops(&self) -> &[Operator<T>] {
        &self.ops
    }

    pub fn brackets(&self) -> &[Bracket] {
        &self.brackets
    }

    pub fn alpha(&self) -> Vec<u8> {
        self.brackets.iter().map(|b| b.alpha()).collect()
    }

    pub fn initial_state(&self) -> &DensityMatrix<T> {
        self.circuit.initial_state()
    }

    pub fn factory(&self) -> &Arc<dyn ChannelFactory<T>> {
        self.circuit.factory()
    }

    pub fn circuit(&self) -> &Circuit<T> {
        &self.circuit
    }

    /// A circuit over the same evolution and initial state.
    pub fn derived_circuit(&self, times: Vec<T>, actions: Vec<Action<T>>, measure: Operator<T>) -> Result<Circuit<T>> {
        Circuit::new(times, actions, measure, self.initial_state().clone(), self.factory().clone())
    }
}
