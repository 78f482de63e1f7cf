//! Simulation engine and scenario language for Wigner's-friend style
//! multi-agent measurement protocols.

pub mod cli;
pub mod dsl;
pub mod error;
pub mod exact;
pub mod hilbert;
pub mod interpretations;
pub mod measurement;
pub mod scenarios;

pub use error::{Error, Result};
