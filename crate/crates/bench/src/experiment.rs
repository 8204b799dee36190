//! Instances, reference optima and single experiment runs.

use std::time::Instant;

use memgrad::agmm::{Agmm, AgmmConfig, Variant};
use memgrad::bundle::ReplacementStrategy;
use memgrad::gmm::{Gmm, GmmConfig};
use memgrad::problem::{composite_value, CompositeProblem, Oracle, OracleCounts};
use memgrad::problems::{make_problem, BenchmarkProblem, ProblemSpec};
use memgrad::restart::{run_adaptive, run_known_mu, RestartConfig, RestartOutcome};
use memgrad::scheme::{run, RestartMode, Scheme, StepReport, StopRule};
use memgrad::trace::{ConvergenceTrace, TraceRow};
use memgrad::Vector;
use serde::Serialize;
use thiserror::Error;

use crate::config::{replacement_name, restart_name, ConfigError, Method, RunConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failed: {0}")]
    Solver(#[from] memgrad::Error),
}

/// Bundle size of the reference runs.
pub const REFERENCE_CAPACITY: usize = 16;

/// Wraps a scheme and remembers the best iterate seen.
pub struct BestTracker<S> {
    inner: S,
    best_objective: f64,
    best_point: Vector,
}

impl<S: Scheme> BestTracker<S> {
    pub fn new(inner: S) -> Self {
        let best_objective = inner.objective();
        let best_point = inner.iterate().clone();
        BestTracker { inner, best_objective, best_point }
    }

    pub fn best(&self) -> (f64, &Vector) {
        (self.best_objective, &self.best_point)
    }

    fn observe(&mut self) {
        if self.inner.objective() < self.best_objective {
            self.best_objective = self.inner.objective();
            self.best_point = self.inner.iterate().clone();
        }
    }
}

impl<S: Scheme> Scheme for BestTracker<S> {
    fn step(&mut self) -> memgrad::Result<StepReport> {
        let r = self.inner.step()?;
        self.observe();
        Ok(r)
    }

    fn iterate(&self) -> &Vector {
        self.inner.iterate()
    }

    fn objective(&self) -> f64 {
        self.inner.objective()
    }

    fn guarantee(&self) -> f64 {
        self.inner.guarantee()
    }

    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    fn occupancy(&self) -> usize {
        self.inner.occupancy()
    }

    fn counts(&self) -> OracleCounts {
        self.inner.counts()
    }

    fn restart(&mut self, mode: RestartMode) {
        self.inner.restart(mode)
    }

    fn prox_start(&mut self) {
        self.inner.prox_start();
        // The starting point may be infeasible; the prox point never is.
        self.best_objective = self.inner.objective();
        self.best_point = self.inner.iterate().clone();
    }

    fn initial_row(&self) -> TraceRow {
        self.inner.initial_row()
    }
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub objective: f64,
    pub point: Vector,
    pub iterations: usize,
}

/// Best point of an adaptively restarted AGMM run with bundle size 16.
/// The value is attained, so it upper bounds the true optimum.
pub fn reference_optimum(problem: &BenchmarkProblem, x0: &Vector, budget: usize) -> Result<Reference, ExperimentError> {
    if budget == 0 {
        return Err(ConfigError::Incompatible("reference budget must be at least 1".into()).into());
    }
    let cfg = AgmmConfig {
        capacity: REFERENCE_CAPACITY,
        strategy: ReplacementStrategy::MaxNorm,
        ..AgmmConfig::default()
    };
    let agmm = Agmm::new(Oracle::with_convexity(problem, 0.0, 0.0), x0.clone(), cfg)?;
    let mut tracker = BestTracker::new(agmm);
    let out = run_adaptive(&mut tracker, &RestartConfig::default(), &StopRule::iterations(budget))?;
    let (objective, point) = tracker.best();
    Ok(Reference { objective, point: point.clone(), iterations: out.trace.iterations() })
}

/// A generated problem together with its starting point and reference.
pub struct Instance {
    pub problem: BenchmarkProblem,
    pub start: Vector,
    pub reference: Reference,
}

impl Instance {
    pub fn prepare(spec: &ProblemSpec, ref_budget: usize) -> Result<Self, ExperimentError> {
        let (problem, start) = make_problem(spec).map_err(|e| ConfigError::Incompatible(e.to_string()))?;
        let reference = reference_optimum(&problem, &start, ref_budget)?;
        Ok(Instance { problem, start, reference })
    }

    pub fn initial_objective(&self) -> f64 {
        composite_value(&self.problem, &self.start)
    }

    /// `(F(x) − F*) / (F(x_0) − F*)`.
    pub fn relative_error(&self, objective: f64) -> f64 {
        let f_star = self.reference.objective;
        (objective - f_star) / (self.initial_objective() - f_star)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceMeta {
    pub problem: String,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub method: String,
    pub m: usize,
    pub replacement: String,
    pub restart: String,
    #[serde(rename = "D")]
    pub decrease_factor: f64,
    pub s: f64,
    pub epsilon: f64,
    pub reference_objective: f64,
    pub initial_objective: f64,
    pub converged: bool,
    /// First iteration at which the relative error is at most `epsilon`.
    pub iterations_to_epsilon: Option<usize>,
    pub iterations: usize,
    pub gradient_calls: usize,
    pub prox_calls: usize,
    pub objective_calls: usize,
    pub wall_seconds: f64,
}

pub struct Experiment {
    pub config: RunConfig,
    pub trace: ConvergenceTrace,
    pub meta: TraceMeta,
    /// Restart bookkeeping of the restarted methods.
    pub restart: Option<RestartOutcome>,
    pub reference_objective: f64,
    pub initial_objective: f64,
}

impl Experiment {
    pub fn relative_errors(&self) -> Vec<f64> {
        let denom = self.initial_objective - self.reference_objective;
        self.trace.rows.iter().map(|r| (r.objective - self.reference_objective) / denom).collect()
    }
}

/// Builds the instance, computes its reference optimum and runs `config`.
pub fn run_experiment(config: &RunConfig) -> Result<Experiment, ExperimentError> {
    config.validate()?;
    let instance = Instance::prepare(&config.problem, config.ref_budget)?;
    run_on(config, &instance)
}

/// Runs `config` on an already prepared instance.
pub fn run_on(config: &RunConfig, instance: &Instance) -> Result<Experiment, ExperimentError> {
    config.validate()?;
    let p = &instance.problem;
    let mu_f = config.mu_f.unwrap_or(p.mu_f());
    let mu_psi = config.mu_psi.unwrap_or(p.mu_psi());
    let f0 = instance.initial_objective();
    let f_star = instance.reference.objective;
    let stop = StopRule::relative(config.max_iters, f_star, f0, config.eps);
    let x0 = instance.start.clone();
    let capacity = config.capacity();
    let restart_cfg = RestartConfig {
        decrease_factor: config.decrease_factor,
        escalation: config.s,
        mode: config.restart,
        growth: Some(mu_f + mu_psi).filter(|m| *m > 0.0),
        ..RestartConfig::default()
    };
    let agmm_cfg = |variant| AgmmConfig {
        capacity,
        strategy: config.replacement,
        ru: config.ru,
        rd: config.rd,
        initial_lipschitz: config.l0,
        newton_iterations: config.newton_iters,
        inner_iterations: config.inner_iterations(),
        variant,
        ..AgmmConfig::default()
    };
    let general = || Agmm::new(Oracle::with_convexity(p, 0.0, 0.0), x0.clone(), agmm_cfg(Variant::General));

    let started = Instant::now();
    let (trace, restart, counts) = match config.method {
        Method::Gm | Method::Gmm => {
            let cfg = GmmConfig {
                capacity,
                strategy: config.replacement,
                ru: config.ru,
                rd: config.rd,
                initial_lipschitz: config.l0,
                inner_iterations: config.inner_iterations(),
                ..GmmConfig::default()
            };
            let mut s = Gmm::new(Oracle::with_convexity(p, mu_f, mu_psi), x0, cfg)?;
            (run(&mut s, &stop)?, None, s.counts())
        }
        Method::Acgm | Method::Agmm => {
            let mut s = general()?;
            (run(&mut s, &stop)?, None, s.counts())
        }
        Method::AgmmSc => {
            let oracle = Oracle::with_convexity(p, mu_f, mu_psi);
            let mut s = Agmm::new(oracle, x0, agmm_cfg(Variant::StronglyConvex))?;
            (run(&mut s, &stop)?, None, s.counts())
        }
        Method::RAgmmKnown => {
            let mut s = general()?;
            let out = run_known_mu(&mut s, mu_f + mu_psi, &restart_cfg, &stop)?;
            (out.trace.clone(), Some(out), s.counts())
        }
        Method::RAgmmAdaptive => {
            let mut s = general()?;
            let out = run_adaptive(&mut s, &restart_cfg, &stop)?;
            (out.trace.clone(), Some(out), s.counts())
        }
    };
    let wall_seconds = started.elapsed().as_secs_f64();

    let spec = &config.problem;
    let meta = TraceMeta {
        problem: spec.kind.to_string(),
        rows: spec.rows,
        cols: spec.cols,
        seed: spec.seed,
        method: config.method.to_string(),
        m: capacity,
        replacement: replacement_name(config.replacement).into(),
        restart: restart_name(config.restart).into(),
        decrease_factor: config.decrease_factor,
        s: config.s,
        epsilon: config.eps,
        reference_objective: f_star,
        initial_objective: f0,
        converged: trace.converged,
        iterations_to_epsilon: stop.target_objective.and_then(|t| trace.first_below(t)),
        iterations: trace.iterations(),
        gradient_calls: counts.gradient,
        prox_calls: counts.prox,
        objective_calls: counts.objective,
        wall_seconds,
    };
    Ok(Experiment {
        config: config.clone(),
        trace,
        meta,
        restart,
        reference_objective: f_star,
        initial_objective: f0,
    })
}
