//! Finite-block simulation of the random binning codes: codebooks, typicality
//! encoding and decoding, averaged states, seed selection and the converse
//! rate check.

mod ball;
pub mod codebook;
mod coder;
pub mod converse;
pub mod derand;
pub mod seeds;
pub mod sim;

pub use codebook::{build_codebook, decode_generic, encode_generic, Codebook, CodebookParams, Search};
pub use coder::CodeIndices;
pub use converse::{converse_check, ConverseCheck, ConverseReport};
pub use derand::{derandomize, DerandomizationReport};
pub use seeds::{derive_seed, stream_rng, Stream};
pub use sim::{quantile, Engine, SimSpec, Simulation, SimulationTrace, Simulator};
