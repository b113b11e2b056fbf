//! Simulation and estimation of n-point correlation functions of
//! driven-dissipative qubit systems through an ancilla measure-and-reset
//! protocol.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod channels;
pub mod error;
pub mod estimators;
pub mod fermion;
pub mod keldysh;
pub mod protocol;
pub mod qmat;
pub mod scalar;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Complex64 = num_complex::Complex<f64>;
pub type Operator = qmat::Operator<f64>;
pub type DensityMatrix = qmat::DensityMatrix<f64>;
pub type QuantumChannel = channels::QuantumChannel<f64>;
pub type LindbladGenerator = channels::LindbladGenerator<f64>;
pub type ChoiData = channels::ChoiData<f64>;
pub type ModelParams = fermion::ModelParams<f64>;
pub type ProtocolSpec = protocol::ProtocolSpec<f64>;
pub type CorrelatorEstimate = estimators::CorrelatorEstimate<f64>;
