//! Quenched limit theorems for random transfer-operator cocycles, computed.
//!
//! Build a [`operators::Model`] (environment law plus per-symbol maps or
//! kernels), bind it to a sampled [`env::EnvPath`] as a
//! [`operators::Cocycle`], and work from there: RPF triplets in [`rpf`],
//! pressure jets and moments in [`moments`], Edgeworth expansions and
//! distribution distances in [`edgeworth`].

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod edgeworth;
pub mod env;
pub mod error;
pub mod grid;
pub mod moments;
pub mod operators;
pub mod presets;
pub mod report;
pub mod rpf;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
