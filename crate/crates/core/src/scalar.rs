//! Scalar abstraction shared by the state algebra and the discrete
//! probability layer.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real field the linear algebra and Shannon quantities are computed over.
///
/// The tolerance gates scale with the precision of the type: `f64` uses the
/// 1e-9 family of gates, `f32` a looser set that its 24-bit mantissa can meet.
pub trait Real: Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Gate for Hermiticity, unit trace and positivity checks.
    fn state_tol() -> Self;
    /// Reconstruction gate for the Hermitian eigensolver (per unit dimension).
    fn eig_tol() -> Self;
    /// Gate on the total mass of a probability table.
    fn pmf_tol() -> Self;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn state_tol() -> Self {
        1e-9
    }
    fn eig_tol() -> Self {
        1e-10
    }
    fn pmf_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn state_tol() -> Self {
        1e-4
    }
    fn eig_tol() -> Self {
        1e-5
    }
    fn pmf_tol() -> Self {
        1e-5
    }
}

/// `-p log2 p` with the `0 log 0 = 0` convention.
pub(crate) fn plog2p<T: Real>(p: T) -> T {
    if p <= T::zero() {
        T::zero()
    } else {
        -p * p.log2()
    }
}
