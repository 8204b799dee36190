//! Per-iteration convergence records.

use serde::{Deserialize, Serialize};

use crate::problem::OracleCounts;
use crate::scheme::StepReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub guarantee: f64,
    pub lipschitz: f64,
    pub weight: f64,
    pub occupancy: usize,
    pub gradient_calls: usize,
    pub prox_calls: usize,
    pub objective_calls: usize,
    /// A restart took place right after this iteration.
    pub restart: bool,
    pub psi_star: Option<f64>,
    pub warm_psi_star: Option<f64>,
    pub lipschitz_backtracks: usize,
    pub step_trials: usize,
}

impl TraceRow {
    pub fn initial(objective: f64, lipschitz: f64, occupancy: usize, counts: OracleCounts) -> Self {
        TraceRow {
            iteration: 0,
            objective,
            guarantee: 0.0,
            lipschitz,
            weight: 0.0,
            occupancy,
            gradient_calls: counts.gradient,
            prox_calls: counts.prox,
            objective_calls: counts.objective,
            restart: false,
            psi_star: None,
            warm_psi_star: None,
            lipschitz_backtracks: 0,
            step_trials: 0,
        }
    }
}

/// Rows ordered by iteration; row 0 describes the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl ConvergenceTrace {
    pub fn new(initial: TraceRow) -> Self {
        ConvergenceTrace { rows: vec![initial], converged: false }
    }

    pub fn push_report(&mut self, report: &StepReport, counts: OracleCounts, restart: bool) {
        let iteration = self.rows.last().map_or(0, |r| r.iteration + 1);
        self.rows.push(TraceRow {
            iteration,
            objective: report.objective,
            guarantee: report.guarantee,
            lipschitz: report.lipschitz,
            weight: report.weight,
            occupancy: report.occupancy,
            gradient_calls: counts.gradient,
            prox_calls: counts.prox,
            objective_calls: counts.objective,
            restart,
            psi_star: report.psi_star,
            warm_psi_star: report.warm_psi_star,
            lipschitz_backtracks: report.lipschitz_backtracks,
            step_trials: report.step_trials,
        });
    }

    /// Number of outer iterations performed.
    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.iteration)
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    pub fn best_objective(&self) -> f64 {
        self.rows.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min)
    }

    /// First iteration whose objective is at or below `target`.
    pub fn first_below(&self, target: f64) -> Option<usize> {
        self.rows.iter().find(|r| r.objective <= target).map(|r| r.iteration)
    }
}
