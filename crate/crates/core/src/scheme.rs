//! Common interface of the iterative solvers.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::OracleCounts;
use crate::trace::{ConvergenceTrace, TraceRow};
use crate::Vector;

/// Bundle handling when a scheme is restarted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RestartMode {
    /// Keep the bundle.
    Soft,
    /// Empty the bundle.
    Hard,
}

/// Summary of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub objective: f64,
    pub guarantee: f64,
    pub lipschitz: f64,
    /// Step size (GMM) or weight `a_{k+1}` (accelerated methods).
    pub weight: f64,
    pub occupancy: usize,
    pub lipschitz_backtracks: usize,
    pub step_trials: usize,
    /// Estimate function optimum `ψ*` (accelerated methods).
    pub psi_star: Option<f64>,
    /// `ψ*` at the middle method's warm start.
    pub warm_psi_star: Option<f64>,
}

/// An iterative method with a monotone, unbounded convergence guarantee
/// `A_k` with `F(x_k) − F* ≤ ‖x_0 − x*‖² / (2 A_k)`, measured from its current
/// anchor `x_0`.
pub trait Scheme {
    fn step(&mut self) -> Result<StepReport>;

    /// Last iterate `x_k`.
    fn iterate(&self) -> &Vector;

    /// `F(x_k)`.
    fn objective(&self) -> f64;

    fn guarantee(&self) -> f64;

    fn lipschitz(&self) -> f64;

    fn occupancy(&self) -> usize;

    fn counts(&self) -> OracleCounts;

    /// Restarts from the current iterate: the anchor becomes `x_k` and the
    /// guarantee is reset to zero.
    fn restart(&mut self, mode: RestartMode);

    /// Replaces the starting point by `prox(x_0, 1/L_0)`; only valid before
    /// the first step.
    fn prox_start(&mut self);

    /// Trace row for the current state.
    fn initial_row(&self) -> TraceRow {
        TraceRow::initial(self.objective(), self.lipschitz(), self.occupancy(), self.counts())
    }
}

/// When to stop an outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iterations: usize,
    /// Stop once `F(x_k)` is at or below this value.
    pub target_objective: Option<f64>,
}

impl StopRule {
    pub fn iterations(max_iterations: usize) -> Self {
        StopRule { max_iterations, target_objective: None }
    }

    /// Relative-error stop `(F(x_k) − F*) / (F(x_0) − F*) ≤ ε`.
    pub fn relative(max_iterations: usize, reference: f64, initial: f64, epsilon: f64) -> Self {
        StopRule {
            max_iterations,
            target_objective: Some(reference + epsilon * (initial - reference)),
        }
    }

    pub fn reached(&self, objective: f64) -> bool {
        self.target_objective.is_some_and(|t| objective <= t)
    }
}

/// Runs `scheme` until the stop rule fires.
pub fn run<S: Scheme + ?Sized>(scheme: &mut S, stop: &StopRule) -> Result<ConvergenceTrace> {
    let mut trace = ConvergenceTrace::new(scheme.initial_row());
    if stop.reached(scheme.objective()) {
        trace.converged = true;
        return Ok(trace);
    }
    for _ in 0..stop.max_iterations {
        let report = scheme.step()?;
        trace.push_report(&report, scheme.counts(), false);
        if stop.reached(report.objective) {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}
