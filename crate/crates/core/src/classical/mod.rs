//! Discrete distributions, Shannon quantities and typicality.

mod pmf;
mod tolerance;
mod typicality;

pub use pmf::{Alphabet, JointPmf, MAX_TABLE};
pub use tolerance::{alpha_n, ToleranceSchedule};
pub use typicality::{empirical_type, is_typical, strictly_within, TypeClass};

pub(crate) use typicality::{counts_within, tv_counts};
