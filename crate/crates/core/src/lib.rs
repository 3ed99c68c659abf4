//! skm-lab: stochastic Krasnoselskii-Mann iterations over finite scenario
//! sets, with exact verification oracles.
//!
//! The crate is organized around five pieces:
//!
//! - [`operators`]: finite-dimensional vectors, finite scenario
//!   distributions, and stochastic nonexpansive operators with exact
//!   expected-operator evaluation;
//! - [`skm`]: relaxation schedules, the product weights `Lambda_k`, the
//!   iteration loop, the randomized output index, and the closed-form
//!   residual bound;
//! - [`problems`]: stochastic gradient descent and stochastic three-operator
//!   splitting instances with independently solved reference solutions;
//! - [`verify`]: scenario-tree enumeration and the inequality checkers that
//!   machine-check the per-step decrease, the variance lemmas, the residual
//!   bound, empirical decay rates, and the weighted running-minimum
//!   diagnostic;
//! - [`cli`]: the `skm-lab` command-line front end with byte-stable CSV and
//!   JSON emission.
//!
//! Everything is deterministic given seeds: scenario draws, output-index
//! draws, and probe points run on separate named generator streams.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod report;
pub mod rng;
pub mod skm;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use report::InequalityReport;
