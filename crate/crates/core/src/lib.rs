//! Tail analysis for linear hyperbolic equations in 1+1 dimensions,
//! written in null coordinates as
//!
//! ```text
//! φ_uv + U φ_u + V φ_v + W φ = 0.
//! ```
//!
//! The crate classifies such equations (characteristic propagation,
//! progressing-wave order), computes their Riemann functions, builds exact
//! Kundt–Newman solutions when the substitution sequence terminates, and
//! measures tails of numerically propagated compact-support data.

pub mod error;
pub mod expr;
pub mod grid;
pub mod quad;
pub mod waveform;

pub use error::{Error, Result};
pub mod equation;
pub mod kundt_newman;
pub mod registry;
pub mod residual;
pub mod riemann;
pub mod solver;
pub mod tails;
