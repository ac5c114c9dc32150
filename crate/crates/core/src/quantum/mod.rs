//! Dense finite-dimensional state algebra.

mod eigen;
mod matrix;
mod state;

pub use eigen::{eigen_hermitian, HermitianEigen};
pub use matrix::ComplexMatrix;
pub use state::{trace_norm, DensityOperator, HermitianObservable, Povm, MAX_DIM};
