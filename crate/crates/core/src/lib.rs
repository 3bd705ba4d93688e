//! Biased adjacent-transposition shuffles and asymmetric exclusion
//! processes: seeded simulation, canonical couplings, the blocking measure,
//! second-class-particle observables, and exact analysis of small chains.

pub mod configs;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod measures;
pub mod observables;
pub mod oracle;
pub mod replicas;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
