//! Std companion of `rumor-core`: graph files, trace JSON, summary
//! statistics and the seeded experiment harness behind the `rumor` binary.

pub mod error;
pub mod experiment;
pub mod io;
pub mod stats;
pub mod trace;

pub use error::{Error, Result};
