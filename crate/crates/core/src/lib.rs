//! Simulator for distributed SGD with lossy gradient compression on
//! heterogeneous (non-iid) data.
//!
//! The crate is organised around five pieces:
//!
//! * [`compressors`]: δ-compressors, ω-quantizers and linear sketches, plus a
//!   Monte Carlo moment estimator used to check their defining bounds.
//! * [`problems`]: synthetic heterogeneous objectives with exact and
//!   stochastic gradient oracles and a known optimum.
//! * [`algorithms`]: D-SGD, D-QSGD, D-EF-SGD, DIANA, D-EF-SGD with bias
//!   correction, EC-SGD-DIANA and the synchronized linear variants, all run
//!   as deterministic worker/server state machines.
//! * [`tuning`]: constant stepsizes from the descent-recursion summation
//!   bounds and the per-method recursion constants.
//! * [`harness`]: experiment configs, seed sweeps, rate and plateau
//!   estimation and CSV export.

// Range checks are written as `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod compressors;
mod error;
pub mod harness;
pub mod problems;
mod rng;
mod trace;
pub mod tuning;

pub use algorithms::{AlgoConfig, Algorithm, RunState, ServerState, Trajectory, WorkerState};
pub use compressors::{CompressorKind, CompressorOp, CompressorSpec, SketchBasis, SketchMode};
pub use error::{Error, Result};
pub use problems::{DissimilarityReport, ProblemSuite, QuadraticNode, SuiteKind};
pub use rng::{Purpose, RngStream};
pub use trace::{Trace, TraceRow};

/// Dense real vector used for iterates, gradients, errors and shifts.
pub type Vector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
