//! Target ensembles, c-q extensions, admissibility and closed-form rates.

mod ensemble;
mod extension;
mod measurement;

pub use ensemble::{CqEnsemble, STATE_TOL};
pub use extension::{
    cascade_rate_point, isolated_rate, two_node_rate, validate_extension, validate_extension_with, ConstraintCheck,
    Extension, NetworkKind, RatePoint, ValidatedExtension, ValidationReport, VALIDATION_TOL,
};
pub use measurement::{average_state, measurement_statistics, povm_statistics};
