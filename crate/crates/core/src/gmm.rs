//! Fixed-point gradient method with memory.
//!
//! Every iteration runs a Lipschitz search to obtain the composite gradient
//! step `x̃ = T_L(x_k)`, stores the resulting lower bound in the bundle's
//! protected slot 0 and then searches for the largest step size `a` such that
//! the bundle model certifies the candidate `x_k − a G λ`. If no step larger
//! than `τ = 1/(L + μ_Ψ)` fits, the method falls back to `x̃`.
//!
//! With capacity 1 the step size search is skipped and the method reduces to
//! the proximal gradient method.

use crate::bundle::{Bundle, ReplacementStrategy};
use crate::error::{Error, Result};
use crate::problem::{descent_condition, prox_grad_step, Oracle, OracleCounts, ProxStep};
use crate::qp::{self, SimplexQp};
use crate::scheme::{RestartMode, Scheme, StepReport};
use crate::Vector;

/// Maximum number of Lipschitz increases per iteration.
pub const MAX_LIPSCHITZ_INCREASES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmConfig {
    pub capacity: usize,
    pub strategy: ReplacementStrategy,
    pub ru: f64,
    pub rd: f64,
    /// Initial Lipschitz estimate; defaults to the problem's hint.
    pub initial_lipschitz: Option<f64>,
    pub inner_iterations: usize,
    pub inner_tolerance: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            capacity: 16,
            strategy: ReplacementStrategy::Cyclic,
            ru: 2.0,
            rd: 0.9,
            initial_lipschitz: None,
            inner_iterations: 1000,
            inner_tolerance: qp::DEFAULT_TOLERANCE,
        }
    }
}

pub(crate) fn check_ratios(ru: f64, rd: f64) -> Result<()> {
    if !(ru > 1.0 && rd > 0.0 && rd <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "search ratios must satisfy ru > 1 >= rd > 0 (got ru = {ru}, rd = {rd})"
        )));
    }
    Ok(())
}

pub(crate) fn resolve_lipschitz(oracle: &Oracle<'_>, given: Option<f64>) -> Result<f64> {
    let l0 = given
        .or_else(|| oracle.problem().lipschitz_hint())
        .ok_or_else(|| Error::InvalidParameter("no initial Lipschitz estimate available".into()))?;
    if !(l0 > 0.0 && l0.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial Lipschitz estimate must be positive (got {l0})")));
    }
    Ok(l0)
}

/// Backtracking search for `L = r_d L_start r_u^j` satisfying the descent condition at `x`.
///
/// Returns the accepted estimate, its prox step and the number of increases.
pub fn lipschitz_search(
    oracle: &mut Oracle<'_>,
    x: &Vector,
    l_start: f64,
    ru: f64,
    rd: f64,
) -> Result<(f64, ProxStep, usize)> {
    let mut l = rd * l_start;
    for increases in 0..=MAX_LIPSCHITZ_INCREASES {
        let step = prox_grad_step(oracle, x, l);
        if descent_condition(&step, x) {
            return Ok((l, step, increases));
        }
        l *= ru;
    }
    Err(Error::LipschitzSearch(MAX_LIPSCHITZ_INCREASES))
}

/// Outcome of the step size search.
#[derive(Debug, Clone)]
pub struct StepSearch {
    pub point: Vector,
    pub objective: f64,
    pub step: f64,
    /// Inner weights of the accepted trial; `None` for the fallback.
    pub weights: Option<Vector>,
    pub trials: usize,
}

/// Decreasing search over `a`, starting at `a_start`, for a candidate certified by the model.
#[allow(clippy::too_many_arguments)]
pub fn step_size_search(
    oracle: &mut Oracle<'_>,
    bundle: &Bundle,
    x: &Vector,
    a_start: f64,
    fallback: &ProxStep,
    tau: f64,
    ru: f64,
    inner_iterations: usize,
    inner_tolerance: f64,
) -> Result<StepSearch> {
    let payload = bundle.linear_payload(x);
    let gram = bundle.gram();
    let mut warm = qp::unit(bundle.len(), 0);
    let mut a = a_start;
    let mut trials = 0;
    while a > tau {
        let problem = SimplexQp::new(gram, &payload, a);
        let sol = qp::solve(&problem, &warm, inner_iterations, inner_tolerance)?;
        let candidate = x - &(bundle.combine(&sol.weights) * a);
        let value = oracle.objective(&candidate);
        trials += 1;
        let certified = -sol.dual_value;
        if value <= certified + crate::slack(certified) {
            return Ok(StepSearch {
                point: candidate,
                objective: value,
                step: a,
                weights: Some(sol.weights),
                trials,
            });
        }
        warm = sol.weights;
        a /= ru;
    }
    Ok(StepSearch {
        point: fallback.point.clone(),
        objective: fallback.objective_at_point,
        step: tau,
        weights: None,
        trials,
    })
}

/// Gradient method with memory.
pub struct Gmm<'p> {
    oracle: Oracle<'p>,
    config: GmmConfig,
    x: Vector,
    f_x: f64,
    anchor: Vector,
    lipschitz: f64,
    step_size: f64,
    guarantee: f64,
    bundle: Bundle,
    initial_lipschitz: f64,
    last_search: Option<StepSearch>,
}

impl<'p> Gmm<'p> {
    pub fn new(mut oracle: Oracle<'p>, x0: Vector, config: GmmConfig) -> Result<Self> {
        check_ratios(config.ru, config.rd)?;
        if x0.len() != oracle.dim() {
            return Err(Error::DimensionMismatch { expected: oracle.dim(), actual: x0.len() });
        }
        let l0 = resolve_lipschitz(&oracle, config.initial_lipschitz)?;
        let bundle = Bundle::new(config.capacity, oracle.dim(), config.strategy)?;
        let f_x = oracle.objective(&x0);
        Ok(Gmm {
            oracle,
            x: x0.clone(),
            f_x,
            anchor: x0,
            lipschitz: l0,
            step_size: 1.0 / l0,
            guarantee: 0.0,
            bundle,
            initial_lipschitz: l0,
            last_search: None,
            config,
        })
    }

    pub fn bundle(&self) -> &Bundle {
        &self.bundle
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn oracle(&self) -> &Oracle<'p> {
        &self.oracle
    }

    pub fn last_search(&self) -> Option<&StepSearch> {
        self.last_search.as_ref()
    }
}

impl Scheme for Gmm<'_> {
    fn step(&mut self) -> Result<StepReport> {
        let cfg = &self.config;
        let (l, fresh, increases) =
            lipschitz_search(&mut self.oracle, &self.x, self.lipschitz, cfg.ru, cfg.rd)?;
        let tau = 1.0 / fresh.step_inverse;

        // The previous fresh entry moves into the replaceable region.
        if self.bundle.capacity() >= 2 && !self.bundle.is_empty() {
            let (h, g) = self.bundle.entry(0);
            let g = g.clone();
            self.bundle.insert(h, g, &[0])?;
        }
        self.bundle.overwrite_slot(0, fresh.scalar_bound, fresh.mapping.clone())?;

        let search = if self.bundle.len() == 1 {
            StepSearch {
                point: fresh.point.clone(),
                objective: fresh.objective_at_point,
                step: tau,
                weights: None,
                trials: 0,
            }
        } else {
            step_size_search(
                &mut self.oracle,
                &self.bundle,
                &self.x,
                self.step_size / cfg.rd,
                &fresh,
                tau,
                cfg.ru,
                cfg.inner_iterations,
                cfg.inner_tolerance,
            )?
        };

        self.lipschitz = l;
        self.step_size = search.step;
        self.guarantee += search.step;
        self.x = search.point.clone();
        self.f_x = search.objective;
        let report = StepReport {
            objective: self.f_x,
            guarantee: self.guarantee,
            lipschitz: l,
            weight: search.step,
            occupancy: self.bundle.len(),
            lipschitz_backtracks: increases,
            step_trials: search.trials,
            psi_star: None,
            warm_psi_star: None,
        };
        self.last_search = Some(search);
        Ok(report)
    }

    fn iterate(&self) -> &Vector {
        &self.x
    }

    fn objective(&self) -> f64 {
        self.f_x
    }

    fn guarantee(&self) -> f64 {
        self.guarantee
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn occupancy(&self) -> usize {
        self.bundle.len()
    }

    fn counts(&self) -> OracleCounts {
        self.oracle.counts()
    }

    fn restart(&mut self, mode: RestartMode) {
        self.anchor = self.x.clone();
        self.guarantee = 0.0;
        if mode == RestartMode::Hard {
            self.bundle.clear();
        }
    }

    fn prox_start(&mut self) {
        self.x = self.oracle.prox(&self.x, 1.0 / self.initial_lipschitz);
        self.f_x = self.oracle.objective(&self.x);
        self.anchor = self.x.clone();
    }
}
