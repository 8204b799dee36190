//! Gradient methods with memory for composite convex problems.
//!
//! The crate minimizes `F = f + Ψ`, where `f` is smooth with a Lipschitz
//! gradient and `Ψ` is a proximable convex regularizer. It provides:
//!
//! * [`gmm::Gmm`], the fixed-point gradient method with memory (with plain
//!   proximal gradient as the `m = 1` case),
//! * [`agmm::Agmm`], the accelerated variant driven by estimate functions and
//!   a Newton middle method (with ACGM as the `m = 1` case),
//! * [`restart`], wrappers that restart any scheme with a sublinear guarantee,
//! * [`problems`], generators for the five synthetic benchmark problems.

// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agmm;
pub mod bundle;
pub mod error;
pub mod gmm;
pub mod problem;
pub mod problems;
pub mod qp;
pub mod restart;
pub mod scheme;
pub mod trace;

pub use error::{Error, Result};
pub use problem::{CompositeProblem, Oracle, OracleCounts, ProxStep};
pub use scheme::{Scheme, StepReport, StopRule};
pub use trace::{ConvergenceTrace, TraceRow};

/// Dense vector type used throughout the crate.
pub type Vector = ndarray::Array1<f64>;

/// Relative slack used for runtime checks of the analytical inequalities.
pub(crate) fn slack(reference: f64) -> f64 {
    10.0 * f64::EPSILON * (1.0 + reference.abs())
}
