//! Empirical coordination of separable quantum states over classical
//! networks: state algebra, discrete information measures, the c-q extension
//! model with its rate functions, a rate optimizer and a finite-block protocol
//! simulator.
//!
//! The state algebra and the probability layer are generic over the real
//! scalar (`f32` or `f64`); the model, optimizer and simulator work in `f64`.

pub mod classical;
pub mod config;
pub mod error;
pub mod families;
pub mod model;
pub mod optimizer;
pub mod protocol;
pub mod quantum;
pub mod scalar;

pub use error::{Error, Result};

pub type Matrix64 = quantum::ComplexMatrix<f64>;
pub type Matrix32 = quantum::ComplexMatrix<f32>;
pub type Rho64 = quantum::DensityOperator<f64>;
pub type Rho32 = quantum::DensityOperator<f32>;
pub type Pmf64 = classical::JointPmf<f64>;
pub type Pmf32 = classical::JointPmf<f32>;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
