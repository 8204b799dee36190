//! Composite problem oracles and the composite gradient mapping.

use crate::Vector;

/// A composite objective `F = f + Ψ`.
///
/// `Ψ` may take the value `+∞` (indicator functions); `prox` must always
/// return a point where `Ψ` is finite. Implementations are immutable and may
/// be shared between threads.
pub trait CompositeProblem: Send + Sync {
    fn dim(&self) -> usize;

    fn smooth_value(&self, x: &Vector) -> f64;

    fn smooth_gradient(&self, x: &Vector) -> Vector;

    /// Value and gradient of `f` in one pass. Override when the two share work.
    fn smooth_value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        (self.smooth_value(x), self.smooth_gradient(x))
    }

    fn regularizer(&self, x: &Vector) -> f64;

    /// `prox_{τΨ}(x) = argmin_z Ψ(z) + ‖z − x‖² / (2τ)`.
    fn prox(&self, x: &Vector, tau: f64) -> Vector;

    fn mu_f(&self) -> f64 {
        0.0
    }

    fn mu_psi(&self) -> f64 {
        0.0
    }

    /// Global Lipschitz constant of `∇f`, when known.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

type ValueFn = Box<dyn Fn(&Vector) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&Vector) -> Vector + Send + Sync>;
type ProxFn = Box<dyn Fn(&Vector, f64) -> Vector + Send + Sync>;

/// Closure-backed problem, mostly for small hand-written instances.
pub struct FnProblem {
    pub dim: usize,
    pub f: ValueFn,
    pub grad: GradFn,
    pub psi: ValueFn,
    pub prox: ProxFn,
    pub mu_f: f64,
    pub mu_psi: f64,
    pub lipschitz: Option<f64>,
}

impl FnProblem {
    /// Smooth problem with `Ψ = 0`.
    pub fn smooth(
        dim: usize,
        f: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        FnProblem {
            dim,
            f: Box::new(f),
            grad: Box::new(grad),
            psi: Box::new(|_| 0.0),
            prox: Box::new(|x, _| x.clone()),
            mu_f: 0.0,
            mu_psi: 0.0,
            lipschitz: None,
        }
    }

    pub fn with_regularizer(
        mut self,
        psi: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        prox: impl Fn(&Vector, f64) -> Vector + Send + Sync + 'static,
    ) -> Self {
        self.psi = Box::new(psi);
        self.prox = Box::new(prox);
        self
    }

    pub fn with_convexity(mut self, mu_f: f64, mu_psi: f64) -> Self {
        self.mu_f = mu_f;
        self.mu_psi = mu_psi;
        self
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }
}

impl CompositeProblem for FnProblem {
    fn dim(&self) -> usize {
        self.dim
    }
    fn smooth_value(&self, x: &Vector) -> f64 {
        (self.f)(x)
    }
    fn smooth_gradient(&self, x: &Vector) -> Vector {
        (self.grad)(x)
    }
    fn regularizer(&self, x: &Vector) -> f64 {
        (self.psi)(x)
    }
    fn prox(&self, x: &Vector, tau: f64) -> Vector {
        (self.prox)(x, tau)
    }
    fn mu_f(&self) -> f64 {
        self.mu_f
    }
    fn mu_psi(&self) -> f64 {
        self.mu_psi
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// `F(x) = f(x) + Ψ(x)`, or `+∞` when `x` is infeasible.
pub fn composite_value(prob: &dyn CompositeProblem, x: &Vector) -> f64 {
    let psi = prob.regularizer(x);
    if !psi.is_finite() {
        return f64::INFINITY;
    }
    prob.smooth_value(x) + psi
}

/// Cumulative oracle usage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleCounts {
    /// Calls returning `f` and `∇f` together.
    pub gradient: usize,
    pub prox: usize,
    /// Evaluations of `F` (each also evaluates `f` once).
    pub objective: usize,
}

/// Counting view of a problem, as seen by one solver.
///
/// The convexity parameters exploited by the solver may differ from the ones
/// the problem advertises (for instance a method that ignores strong convexity
/// runs with `μ = 0`), so they are stored here.
pub struct Oracle<'p> {
    problem: &'p dyn CompositeProblem,
    mu_f: f64,
    mu_psi: f64,
    counts: OracleCounts,
}

impl<'p> Oracle<'p> {
    /// Oracle exploiting the convexity parameters advertised by `problem`.
    pub fn new(problem: &'p dyn CompositeProblem) -> Self {
        Oracle {
            problem,
            mu_f: problem.mu_f(),
            mu_psi: problem.mu_psi(),
            counts: OracleCounts::default(),
        }
    }

    /// Oracle exploiting the given convexity parameters instead.
    pub fn with_convexity(problem: &'p dyn CompositeProblem, mu_f: f64, mu_psi: f64) -> Self {
        Oracle {
            problem,
            mu_f,
            mu_psi,
            counts: OracleCounts::default(),
        }
    }

    pub fn problem(&self) -> &'p dyn CompositeProblem {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn mu_f(&self) -> f64 {
        self.mu_f
    }

    pub fn mu_psi(&self) -> f64 {
        self.mu_psi
    }

    pub fn mu(&self) -> f64 {
        self.mu_f + self.mu_psi
    }

    pub fn counts(&self) -> OracleCounts {
        self.counts
    }

    pub fn value_and_gradient(&mut self, x: &Vector) -> (f64, Vector) {
        self.counts.gradient += 1;
        self.problem.smooth_value_and_gradient(x)
    }

    pub fn prox(&mut self, x: &Vector, tau: f64) -> Vector {
        self.counts.prox += 1;
        self.problem.prox(x, tau)
    }

    pub fn objective(&mut self, x: &Vector) -> f64 {
        self.counts.objective += 1;
        composite_value(self.problem, x)
    }

    /// `f` and `Ψ` separately, counted as one evaluation of `F`.
    fn split_objective(&mut self, x: &Vector) -> (f64, f64) {
        self.counts.objective += 1;
        (self.problem.smooth_value(x), self.problem.regularizer(x))
    }
}

/// One evaluation of the composite gradient mapping at `x` for a given `L`.
#[derive(Debug, Clone)]
pub struct ProxStep {
    /// `T_L(x)`.
    pub point: Vector,
    /// `g_L(x) = (L + μ_Ψ)(x − T_L(x))`.
    pub mapping: Vector,
    /// `h_F(x) = F(T) + ‖g‖² / (2(L + μ_Ψ)) − ⟨g, x⟩`.
    pub scalar_bound: f64,
    /// `F(T_L(x))`.
    pub objective_at_point: f64,
    /// `L + μ_Ψ`.
    pub step_inverse: f64,
    pub lipschitz: f64,
    pub smooth_at_x: f64,
    pub gradient_at_x: Vector,
    pub smooth_at_point: f64,
}

/// Evaluates `T_L(x)`, `g_L(x)` and `h_F(x)` with one gradient and one prox call.
pub fn prox_grad_step(oracle: &mut Oracle<'_>, x: &Vector, lipschitz: f64) -> ProxStep {
    let (fx, grad) = oracle.value_and_gradient(x);
    prox_step_from_gradient(oracle, x, fx, grad, lipschitz)
}

/// Same as [`prox_grad_step`] but reuses an already evaluated `f(x)`, `∇f(x)`.
pub fn prox_step_from_gradient(
    oracle: &mut Oracle<'_>,
    x: &Vector,
    fx: f64,
    grad: Vector,
    lipschitz: f64,
) -> ProxStep {
    let shifted = x - &(&grad / lipschitz);
    let point = oracle.prox(&shifted, 1.0 / lipschitz);
    let step_inverse = lipschitz + oracle.mu_psi();
    let mapping = (x - &point) * step_inverse;
    let (f_point, psi_point) = oracle.split_objective(&point);
    let objective_at_point = f_point + psi_point;
    let scalar_bound =
        objective_at_point + mapping.dot(&mapping) / (2.0 * step_inverse) - mapping.dot(x);
    ProxStep {
        point,
        mapping,
        scalar_bound,
        objective_at_point,
        step_inverse,
        lipschitz,
        smooth_at_x: fx,
        gradient_at_x: grad,
        smooth_at_point: f_point,
    }
}

/// Local upper bound test `f(T) ≤ f(x) + ⟨∇f(x), T − x⟩ + (L/2)‖T − x‖²`.
pub fn descent_condition(step: &ProxStep, x: &Vector) -> bool {
    let diff = &step.point - x;
    let model = step.smooth_at_x
        + step.gradient_at_x.dot(&diff)
        + 0.5 * step.lipschitz * diff.dot(&diff);
    step.smooth_at_point <= model + crate::slack(step.smooth_at_x)
}

/// Certified lower bound `h_F + ⟨g, y⟩ + (μ/2)‖y − x_center‖² ≤ F(y)`.
pub fn lower_bound_value(step: &ProxStep, x_center: &Vector, y: &Vector, mu: f64) -> f64 {
    let d = y - x_center;
    step.scalar_bound + step.mapping.dot(y) + 0.5 * mu * d.dot(&d)
}
