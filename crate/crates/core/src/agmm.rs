//! Accelerated gradient method with memory.
//!
//! The method maintains an estimate function
//! `ψ_k(x) = ⟨λ_k, H + Gᵀx⟩ + ‖x − x_0‖² / (2σ(A_k))`, `σ(A) = A / (1 + μA)`,
//! whose optimum `ψ_k*` upper bounds `F(x_k)`. Each iteration takes an
//! accelerated composite gradient step at the test point `y_{k+1}`, writes
//! the aggregated entry `(h_k, g_k)` to slot 0 and the fresh entry to slot 1,
//! and lets a Newton root finder (the middle method) enlarge `A_{k+1}` as far
//! as the bundle allows while keeping `ψ* ≥ F(x_{k+1})`.
//!
//! [`Variant::General`] ignores strong convexity. [`Variant::StronglyConvex`]
//! uses lower bounds with the quadratic term centred at `x_0`; with `μ = 0`
//! it coincides with the general variant up to rounding.
//!
//! With capacity 1 there is no room for both entries: the model is the single
//! aggregate, updated with weights `(A_k, a_{k+1})`, which is exactly ACGM.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::bundle::{Bundle, ReplacementStrategy};
use crate::error::{Error, Result};
use crate::gmm::{check_ratios, resolve_lipschitz, MAX_LIPSCHITZ_INCREASES};
use crate::problem::{descent_condition, prox_grad_step, Oracle, OracleCounts};
use crate::qp::{self, quad_form, SimplexQp};
use crate::scheme::{RestartMode, Scheme, StepReport};
use crate::Vector;

/// Denominators `⟨λ, Qλ⟩` below this end the middle method.
pub const MIN_CURVATURE: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    General,
    StronglyConvex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgmmConfig {
    pub capacity: usize,
    pub strategy: ReplacementStrategy,
    pub ru: f64,
    pub rd: f64,
    pub initial_lipschitz: Option<f64>,
    pub newton_iterations: usize,
    pub inner_iterations: usize,
    pub inner_tolerance: f64,
    pub variant: Variant,
}

impl Default for AgmmConfig {
    fn default() -> Self {
        AgmmConfig {
            capacity: 16,
            strategy: ReplacementStrategy::Cyclic,
            ru: 2.0,
            rd: 0.9,
            initial_lipschitz: None,
            newton_iterations: 2,
            inner_iterations: 10,
            inner_tolerance: qp::DEFAULT_TOLERANCE,
            variant: Variant::General,
        }
    }
}

/// `σ(A) = A / (1 + μA)`.
pub fn sigma(guarantee: f64, mu: f64) -> f64 {
    guarantee / (1.0 + mu * guarantee)
}

/// Positive root of `(L − μ_f)a² − (γ + Aμ)a − Aγ = 0`, `γ = 1 + μA`.
pub fn acceleration_coefficient(lipschitz: f64, guarantee: f64, mu_f: f64, mu_psi: f64) -> Result<f64> {
    if !(lipschitz > mu_f) {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz estimate {lipschitz} must exceed mu_f = {mu_f}"
        )));
    }
    let mu = mu_f + mu_psi;
    let gamma = 1.0 + mu * guarantee;
    let lm = lipschitz - mu_f;
    let b = gamma + guarantee * mu;
    Ok(b / (2.0 * lm) * (1.0 + (1.0 + 4.0 * lm * guarantee * gamma / (b * b)).sqrt()))
}

/// Positive root of `L a² = a + A`.
pub fn general_coefficient(lipschitz: f64, guarantee: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * lipschitz * guarantee).sqrt()) / (2.0 * lipschitz)
}

/// `y = (A γ̄ x + a γ v) / (A γ̄ + a γ)` with `γ = 1 + μA`, `γ̄ = 1 + μ(A + a)`.
pub fn test_point(x: &Vector, v: &Vector, guarantee: f64, a: f64, mu: f64) -> Vector {
    let gamma = 1.0 + mu * guarantee;
    let gamma_bar = 1.0 + mu * (guarantee + a);
    let wx = guarantee * gamma_bar;
    let wv = a * gamma;
    let total = wx + wv;
    if wx == 0.0 {
        return v.clone();
    }
    x * (wx / total) + v * (wv / total)
}

/// Lower bound generated at `y`, with its quadratic term recentred at `x_0`:
/// `F(z) ≥ h̄ + ⟨ḡ, z⟩ + (μ/2)‖z − x_0‖²`.
pub fn model_entry(
    x_next: &Vector,
    f_next: f64,
    y: &Vector,
    lipschitz: f64,
    x0: &Vector,
    mu_f: f64,
    mu_psi: f64,
) -> (f64, Vector) {
    let mu = mu_f + mu_psi;
    let lm = lipschitz - mu_f;
    let lp = lipschitz + mu_psi;
    let g = y * lm - &(x_next * lp) + &(x0 * mu);
    let h = f_next - 0.5 * lm * y.dot(y) + 0.5 * lp * x_next.dot(x_next) - 0.5 * mu * x0.dot(x0);
    (h, g)
}

/// `ψ* = ⟨C, λ⟩ − (σ/2)⟨λ, Qλ⟩` for a problem whose scale is `σ`.
pub fn psi_star(weights: &Vector, qp: &SimplexQp<'_>) -> f64 {
    -qp.dual_value(weights)
}

/// One Newton step on `Γ(A) = ψ*(A) − F(x_+)`.
pub fn newton_update(guarantee: f64, gap: f64, curvature: f64, mu: f64) -> f64 {
    let gamma = 1.0 + mu * guarantee;
    guarantee + 2.0 * gamma * gamma * gap / curvature
}

#[derive(Debug, Clone)]
pub struct MiddleResult {
    pub weights: Vector,
    pub guarantee: f64,
    pub psi_star: f64,
    /// Newton iterates that passed the estimate sequence check.
    pub accepted: usize,
}

/// Newton middle method: enlarges `A` from `a0` while `ψ*(A) ≥ f_next`.
#[allow(clippy::too_many_arguments)]
pub fn newton_middle(
    gram: ArrayView2<'_, f64>,
    payload: &Vector,
    f_next: f64,
    mu: f64,
    warm: &Vector,
    a0: f64,
    newton_budget: usize,
    inner_budget: usize,
    inner_tolerance: f64,
) -> Result<MiddleResult> {
    let warm_qp = SimplexQp::new(gram, payload, sigma(a0, mu));
    let mut result = MiddleResult {
        weights: warm.clone(),
        guarantee: a0,
        psi_star: psi_star(warm, &warm_qp),
        accepted: 0,
    };
    let mut a = a0;
    for _ in 0..newton_budget {
        let problem = SimplexQp::new(gram, payload, sigma(a, mu));
        let sol = qp::solve(&problem, warm, inner_budget, inner_tolerance)?;
        let psi = -sol.dual_value;
        if psi < f_next {
            break;
        }
        let curvature = quad_form(gram, &sol.weights);
        result = MiddleResult {
            weights: sol.weights,
            guarantee: a,
            psi_star: psi,
            accepted: result.accepted + 1,
        };
        if curvature < MIN_CURVATURE {
            break;
        }
        a = newton_update(a, psi - f_next, curvature, mu);
    }
    Ok(result)
}

/// Accelerated gradient method with memory.
pub struct Agmm<'p> {
    oracle: Oracle<'p>,
    config: AgmmConfig,
    mu: f64,
    anchor: Vector,
    x: Vector,
    f_x: f64,
    v: Vector,
    guarantee: f64,
    agg_scalar: f64,
    agg_gradient: Vector,
    lipschitz: f64,
    initial_lipschitz: f64,
    bundle: Bundle,
    psi_star: Option<f64>,
}

impl<'p> Agmm<'p> {
    /// The general variant requires an oracle exploiting `μ_f = μ_Ψ = 0`.
    pub fn new(mut oracle: Oracle<'p>, x0: Vector, config: AgmmConfig) -> Result<Self> {
        check_ratios(config.ru, config.rd)?;
        if x0.len() != oracle.dim() {
            return Err(Error::DimensionMismatch { expected: oracle.dim(), actual: x0.len() });
        }
        let mu = match config.variant {
            Variant::General => {
                if oracle.mu() != 0.0 {
                    return Err(Error::InvalidParameter(
                        "the general variant cannot exploit strong convexity".into(),
                    ));
                }
                0.0
            }
            Variant::StronglyConvex => oracle.mu(),
        };
        let l0 = resolve_lipschitz(&oracle, config.initial_lipschitz)?;
        let bundle = Bundle::new(config.capacity, oracle.dim(), config.strategy)?;
        let f_x = oracle.objective(&x0);
        let n = oracle.dim();
        Ok(Agmm {
            oracle,
            mu,
            anchor: x0.clone(),
            v: x0.clone(),
            x: x0,
            f_x,
            guarantee: 0.0,
            agg_scalar: 0.0,
            agg_gradient: Vector::zeros(n),
            lipschitz: l0,
            initial_lipschitz: l0,
            bundle,
            psi_star: None,
            config,
        })
    }

    pub fn bundle(&self) -> &Bundle {
        &self.bundle
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn estimate_minimizer(&self) -> &Vector {
        &self.v
    }

    /// Aggregated entry `(h_k, g_k)`.
    pub fn aggregate(&self) -> (f64, &Vector) {
        (self.agg_scalar, &self.agg_gradient)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn psi_star(&self) -> Option<f64> {
        self.psi_star
    }

    pub fn oracle(&self) -> &Oracle<'p> {
        &self.oracle
    }

    fn coefficient(&self, l: f64) -> Result<f64> {
        match self.config.variant {
            Variant::General => Ok(general_coefficient(l, self.guarantee)),
            Variant::StronglyConvex => {
                acceleration_coefficient(l, self.guarantee, self.oracle.mu_f(), self.oracle.mu_psi())
            }
        }
    }

    /// Estimate function optimum for a single aggregated entry.
    fn single_entry_psi(&self, h: f64, g: &Vector, guarantee: f64) -> f64 {
        h + g.dot(&self.anchor) - 0.5 * sigma(guarantee, self.mu) * g.dot(g)
    }
}

impl Scheme for Agmm<'_> {
    fn step(&mut self) -> Result<StepReport> {
        let (ru, rd) = (self.config.ru, self.config.rd);
        let mu_f = self.oracle.mu_f();
        let mut l = rd * self.lipschitz;
        while l <= mu_f {
            l *= ru;
        }
        let mut increases = 0;
        let (a, y, fresh) = loop {
            let a = self.coefficient(l)?;
            let y = test_point(&self.x, &self.v, self.guarantee, a, self.mu);
            let fresh = prox_grad_step(&mut self.oracle, &y, l);
            if descent_condition(&fresh, &y) {
                break (a, y, fresh);
            }
            if increases == MAX_LIPSCHITZ_INCREASES {
                return Err(Error::LipschitzSearch(MAX_LIPSCHITZ_INCREASES));
            }
            increases += 1;
            l *= ru;
        };
        let f_next = fresh.objective_at_point;
        let (h_bar, g_bar) = match self.config.variant {
            Variant::General => (fresh.scalar_bound, fresh.mapping.clone()),
            Variant::StronglyConvex => model_entry(
                &fresh.point,
                f_next,
                &y,
                l,
                &self.anchor,
                mu_f,
                self.oracle.mu_psi(),
            ),
        };

        let previous = self.guarantee;
        let warm_psi;
        let psi;
        if self.bundle.capacity() == 1 {
            let total = previous + a;
            let (wa, wb) = (previous / total, a / total);
            self.agg_scalar = wa * self.agg_scalar + wb * h_bar;
            self.agg_gradient = &self.agg_gradient * wa + &(&g_bar * wb);
            self.guarantee = total;
            self.bundle.overwrite_slot(0, self.agg_scalar, self.agg_gradient.clone())?;
            psi = self.single_entry_psi(self.agg_scalar, &self.agg_gradient, total);
            warm_psi = psi;
        } else if self.bundle.is_empty() {
            self.bundle.insert(h_bar, g_bar.clone(), &[])?;
            self.agg_scalar = h_bar;
            self.agg_gradient = g_bar;
            self.guarantee = previous + a;
            psi = self.single_entry_psi(h_bar, &self.agg_gradient, self.guarantee);
            warm_psi = psi;
        } else {
            if self.bundle.len() >= 2 && self.bundle.capacity() > 2 {
                let (h, g) = self.bundle.entry(1);
                let g = g.clone();
                self.bundle.insert(h, g, &[0, 1])?;
            }
            self.bundle.overwrite_slot(0, self.agg_scalar, self.agg_gradient.clone())?;
            self.bundle.overwrite_slot(1, h_bar, g_bar)?;
            let payload = self.bundle.linear_payload(&self.anchor);
            let p = self.bundle.len();
            let mut warm = Vector::zeros(p);
            warm[0] = previous / (previous + a);
            warm[1] = a / (previous + a);
            let middle = newton_middle(
                self.bundle.gram(),
                &payload,
                f_next,
                self.mu,
                &warm,
                previous + a,
                self.config.newton_iterations,
                self.config.inner_iterations,
                self.config.inner_tolerance,
            )?;
            let warm_qp = SimplexQp::new(self.bundle.gram(), &payload, sigma(previous + a, self.mu));
            warm_psi = psi_star(&warm, &warm_qp);
            let (h, g) = self.bundle.aggregate(&middle.weights)?;
            self.agg_scalar = h;
            self.agg_gradient = g;
            self.guarantee = middle.guarantee;
            psi = middle.psi_star;
        }

        self.v = &self.anchor - &(&self.agg_gradient * sigma(self.guarantee, self.mu));
        self.x = fresh.point;
        self.f_x = f_next;
        self.lipschitz = l;
        self.psi_star = Some(psi);
        Ok(StepReport {
            objective: f_next,
            guarantee: self.guarantee,
            lipschitz: l,
            weight: a,
            occupancy: self.bundle.len(),
            lipschitz_backtracks: increases,
            step_trials: 0,
            psi_star: Some(psi),
            warm_psi_star: Some(warm_psi),
        })
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
        let new_anchor = self.x.clone();
        match mode {
            RestartMode::Hard => {
                self.bundle.clear();
                self.agg_scalar = 0.0;
                self.agg_gradient.fill(0.0);
            }
            RestartMode::Soft if self.mu > 0.0 => {
                // Recentre μ/2‖z − x_0‖² at the new anchor.
                let delta_g = (&new_anchor - &self.anchor) * self.mu;
                let delta_h = 0.5 * self.mu * (self.anchor.dot(&self.anchor) - new_anchor.dot(&new_anchor));
                self.bundle.shift_all(delta_h, &delta_g);
                self.agg_scalar += delta_h;
                self.agg_gradient += &delta_g;
            }
            RestartMode::Soft => {}
        }
        self.v = new_anchor.clone();
        self.anchor = new_anchor;
        self.guarantee = 0.0;
        self.psi_star = None;
    }

    fn prox_start(&mut self) {
        self.x = self.oracle.prox(&self.x, 1.0 / self.initial_lipschitz);
        self.f_x = self.oracle.objective(&self.x);
        self.anchor = self.x.clone();
        self.v = self.x.clone();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{composite_value, CompositeProblem, FnProblem};
    use crate::scheme::{run, StopRule};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shrink(x: &Vector, t: f64) -> Vector {
        x.mapv(|v| v.signum() * (v.abs() - t).max(0.0))
    }

    /// f = ½‖Mx − b‖², Ψ = λ₁‖x‖₁ + (λ₂/2)‖x‖².
    fn elastic(m: Array2<f64>, b: Vector, l1: f64, l2: f64) -> FnProblem {
        let lf = m.t().dot(&m).diag().sum();
        let (m1, b1) = (m.clone(), b.clone());
        FnProblem::smooth(
            m.ncols(),
            move |x| {
                let r = m1.dot(x) - &b1;
                0.5 * r.dot(&r)
            },
            move |x| m.t().dot(&(m.dot(x) - &b)),
        )
        .with_regularizer(
            move |x| l1 * x.mapv(f64::abs).sum() + 0.5 * l2 * x.dot(x),
            move |x, t| shrink(x, t * l1) / (1.0 + t * l2),
        )
        .with_convexity(0.0, l2)
        .with_lipschitz(lf)
    }

    fn random_elastic(seed: u64, rows: usize, cols: usize, l1: f64, l2: f64) -> (FnProblem, Vector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0));
        let b = Vector::from_shape_fn(rows, |_| rng.random_range(-3.0..3.0));
        let x0 = Vector::from_shape_fn(cols, |_| rng.random_range(-2.0..2.0));
        (elastic(m, b, l1, l2), x0)
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(acceleration_coefficient(1.0, 0.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(general_coefficient(1.0, 0.0), 1.0);
        let a = acceleration_coefficient(1.0, 2.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(a, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a * a, a + 2.0, epsilon = 1e-14);
        assert!(acceleration_coefficient(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn coefficient_first_iteration_is_inverse_curvature() {
        let a = acceleration_coefficient(5.0, 0.0, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(a, 0.25, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn coefficient_identity(l in 0.01f64..100.0, big_a in 0.0f64..100.0, mu_f in 0.0f64..1.0, mu_psi in 0.0f64..1.0) {
            let l = l + mu_f;
            let a = acceleration_coefficient(l, big_a, mu_f, mu_psi).unwrap();
            let mu = mu_f + mu_psi;
            let lhs = (l + mu_psi) * a * a;
            let rhs = (big_a + a) * (1.0 + mu * (big_a + a));
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
            prop_assert!(a > 0.0);
        }

        #[test]
        fn coefficient_reduces_without_convexity(l in 0.01f64..100.0, big_a in 0.0f64..100.0) {
            let a = acceleration_coefficient(l, big_a, 0.0, 0.0).unwrap();
            let b = general_coefficient(l, big_a);
            prop_assert!((a - b).abs() <= 1e-12 * b);
        }

        #[test]
        fn model_entry_reduces_without_convexity(
            y in prop::collection::vec(-3.0f64..3.0, 2),
            xn in prop::collection::vec(-3.0f64..3.0, 2),
            f in -5.0f64..5.0,
            l in 0.1f64..10.0,
        ) {
            let (y, xn) = (Vector::from(y), Vector::from(xn));
            let (h, g) = model_entry(&xn, f, &y, l, &Vector::zeros(2), 0.0, 0.0);
            let g_ref = (&y - &xn) * l;
            let h_ref = f + g_ref.dot(&g_ref) / (2.0 * l) - g_ref.dot(&y);
            prop_assert!((&g - &g_ref).iter().all(|d| d.abs() <= 1e-12));
            prop_assert!((h - h_ref).abs() <= 1e-10 * (1.0 + h_ref.abs()));
        }
    }

    #[test]
    fn test_point_examples() {
        let x = array![1.0, 2.0];
        let v = array![-3.0, 0.5];
        assert_eq!(test_point(&x, &v, 0.0, 0.7, 0.3), v);
        assert_eq!(test_point(&x, &x, 1.3, 0.7, 0.3), x);
        assert_abs_diff_eq!(test_point(&x, &v, 2.0, 2.0, 0.0), (&x + &v) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn model_entry_stationary_point() {
        let y = array![0.3, -0.2];
        let (h, g) = model_entry(&y, 1.25, &y, 2.0, &array![5.0, 5.0], 0.0, 0.0);
        assert_eq!(g, array![0.0, 0.0]);
        assert_abs_diff_eq!(h, 1.25, epsilon = 1e-15);
    }

    #[test]
    fn model_entry_is_lower_bound() {
        let (p, x0) = random_elastic(3, 6, 4, 0.4, 0.7);
        let mut o = Oracle::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y = Vector::from_shape_fn(4, |_| rng.random_range(-2.0..2.0));
        let l = p.lipschitz_hint().unwrap();
        let s = prox_grad_step(&mut o, &y, l);
        assert!(descent_condition(&s, &y));
        let (h, g) = model_entry(&s.point, s.objective_at_point, &y, l, &x0, 0.0, 0.7);
        for _ in 0..100 {
            let z = Vector::from_shape_fn(4, |_| rng.random_range(-5.0..5.0));
            let d = &z - &x0;
            let lb = h + g.dot(&z) + 0.35 * d.dot(&d);
            let fz = composite_value(&p, &z);
            assert!(lb <= fz + 1e-10 * (1.0 + fz.abs()));
        }
    }

    #[test]
    fn psi_star_examples() {
        let q = array![[4.0]];
        let c = array![3.0];
        let qp = SimplexQp::new(q.view(), &c, sigma(2.0, 0.5));
        assert_eq!(psi_star(&array![1.0], &qp), 3.0 - 0.5 * 4.0);
        assert_eq!(sigma(2.5, 0.0), 2.5);
    }

    #[test]
    fn first_iteration_psi_equals_objective() {
        let (p, x0) = random_elastic(5, 5, 3, 0.2, 0.5);
        for variant in [Variant::General, Variant::StronglyConvex] {
            let oracle = match variant {
                Variant::General => Oracle::with_convexity(&p, 0.0, 0.0),
                Variant::StronglyConvex => Oracle::new(&p),
            };
            let cfg = AgmmConfig { variant, ..AgmmConfig::default() };
            let mut agmm = Agmm::new(oracle, x0.clone(), cfg).unwrap();
            let r = agmm.step().unwrap();
            assert_abs_diff_eq!(r.psi_star.unwrap(), r.objective, epsilon = 1e-11 * (1.0 + r.objective.abs()));
            let mu_f = 0.0;
            assert_abs_diff_eq!(r.guarantee, 1.0 / (r.lipschitz - mu_f), epsilon = 1e-15);
        }
    }

    #[test]
    fn first_step_scalar_quadratic() {
        let p = FnProblem::smooth(1, |x| 0.5 * x[0] * x[0], |x| x.clone()).with_lipschitz(1.0);
        let cfg = AgmmConfig { rd: 1.0, ..AgmmConfig::default() };
        let mut agmm = Agmm::new(Oracle::new(&p), array![2.0], cfg).unwrap();
        let r = agmm.step().unwrap();
        assert_eq!(agmm.iterate(), &array![0.0]);
        assert_eq!(r.guarantee, 1.0);
        assert_eq!(r.psi_star, Some(0.0));
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn newton_update_examples() {
        assert_eq!(newton_update(1.0, 0.5, 1.0, 0.0), 2.0);
        assert_eq!(newton_update(1.0, 0.5, 1.0, 1.0), 5.0);
    }

    #[test]
    fn newton_middle_single_entry_root() {
        // ψ*(A) = c − A/2 has its root at A = 2(c − f); one Newton step finds it.
        let q = array![[1.0]];
        let c = array![4.0];
        let f_next = 3.0;
        let r = newton_middle(q.view(), &c, f_next, 0.0, &array![1.0], 1.0, 2, 10, 1e-9).unwrap();
        assert_eq!(r.guarantee, 2.0);
        assert_eq!(r.accepted, 2);
        let r = newton_middle(q.view(), &c, f_next, 0.0, &array![1.0], 1.0, 1, 10, 1e-9).unwrap();
        assert_eq!(r.guarantee, 1.0);
    }

    #[test]
    fn newton_middle_zero_budget() {
        let q = array![[1.0, 0.0], [0.0, 2.0]];
        let c = array![4.0, 1.0];
        let warm = array![0.25, 0.75];
        let r = newton_middle(q.view(), &c, 0.0, 0.3, &warm, 1.5, 0, 10, 1e-9).unwrap();
        assert_eq!(r.weights, warm);
        assert_eq!(r.guarantee, 1.5);
    }

    #[test]
    fn newton_middle_zero_curvature_exits() {
        let q = Array2::zeros((2, 2));
        let c = array![1.0, 2.0];
        let r = newton_middle(q.view(), &c, 0.0, 0.0, &array![0.5, 0.5], 1.0, 5, 10, 1e-9).unwrap();
        assert_eq!(r.guarantee, 1.0);
        assert_eq!(r.accepted, 1);
        assert_eq!(r.psi_star, 2.0);
    }

    #[test]
    fn zero_budget_trace() {
        let (p, x0) = random_elastic(1, 4, 3, 0.1, 0.0);
        let mut agmm = Agmm::new(Oracle::new(&p), x0, AgmmConfig::default()).unwrap();
        let t = run(&mut agmm, &StopRule::iterations(0)).unwrap();
        assert_eq!(t.rows.len(), 1);
    }

    #[test]
    fn general_variant_rejects_strong_convexity() {
        let (p, x0) = random_elastic(1, 4, 3, 0.1, 0.5);
        assert!(Agmm::new(Oracle::new(&p), x0, AgmmConfig::default()).is_err());
    }

    #[test]
    fn guarantee_growth_and_estimate_sequence() {
        let (p, x0) = random_elastic(9, 12, 8, 0.3, 0.0);
        let l_f = p.lipschitz_hint().unwrap();
        let l_u = (2.0 * l_f).max(0.9 * l_f);
        for capacity in [1, 2, 3, 8] {
            for strategy in [ReplacementStrategy::Cyclic, ReplacementStrategy::MaxNorm] {
                let cfg = AgmmConfig { capacity, strategy, ..AgmmConfig::default() };
                let mut agmm = Agmm::new(Oracle::new(&p), x0.clone(), cfg).unwrap();
                for k in 0..20 {
                    let before = agmm.guarantee();
                    let r = agmm.step().unwrap();
                    assert!(r.guarantee >= before + r.weight * (1.0 - 1e-12));
                    let kk = (k + 1) as f64;
                    assert!(r.guarantee >= (kk + 1.0).powi(2) / (4.0 * l_u) * (1.0 - 1e-12));
                    let psi = r.psi_star.unwrap();
                    assert!(psi >= r.objective - 1e-9 * (1.0 + r.objective.abs()));
                    let warm = r.warm_psi_star.unwrap();
                    assert!(warm >= r.objective - 1e-9 * (1.0 + r.objective.abs()));
                    assert!(r.occupancy <= capacity);
                }
            }
        }
    }

    #[test]
    fn zero_mu_strongly_convex_matches_general() {
        let (p, x0) = random_elastic(21, 10, 6, 0.5, 0.0);
        let mk = |variant| {
            let cfg = AgmmConfig { variant, capacity: 5, ..AgmmConfig::default() };
            Agmm::new(Oracle::new(&p), x0.clone(), cfg).unwrap()
        };
        let mut a = mk(Variant::General);
        let mut b = mk(Variant::StronglyConvex);
        for _ in 0..30 {
            a.step().unwrap();
            b.step().unwrap();
            let scale = 1.0 + a.iterate().dot(a.iterate()).sqrt();
            let drift = (a.iterate() - b.iterate()).mapv(f64::abs).sum();
            assert!(drift <= 1e-12 * scale * 10.0, "drift {drift}");
        }
    }

    /// Textbook ACGM with strong convexity in Ψ.
    fn reference_acgm(p: &FnProblem, x0: &Vector, iters: usize, mu_psi: f64) -> Vec<Vector> {
        let (ru, rd) = (2.0, 0.9);
        let mu = mu_psi;
        let mut l = p.lipschitz_hint().unwrap();
        let (mut x, mut v, mut big_a) = (x0.clone(), x0.clone(), 0.0_f64);
        let mut out = Vec::new();
        for _ in 0..iters {
            l *= rd;
            loop {
                let gamma = 1.0 + mu * big_a;
                // (L + μ_Ψ) a² = (A + a)(1 + μ(A + a)), solved as a quadratic.
                let qa = l + mu_psi - mu;
                let qb = -(1.0 + 2.0 * mu * big_a);
                let qc = -big_a * gamma;
                let a = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
                let gamma_bar = 1.0 + mu * (big_a + a);
                let y = (&x * (big_a * gamma_bar) + &v * (a * gamma)) / (big_a * gamma_bar + a * gamma);
                let grad = p.smooth_gradient(&y);
                let fy = p.smooth_value(&y);
                let t = p.prox(&(&y - &(&grad / l)), 1.0 / l);
                let d = &t - &y;
                if p.smooth_value(&t) <= fy + grad.dot(&d) + 0.5 * l * d.dot(&d) + 10.0 * f64::EPSILON * (1.0 + fy.abs()) {
                    let c = (&y - &t) * (l + mu_psi);
                    v = (&v * gamma + &(&y * (a * mu)) - &(&c * a)) / gamma_bar;
                    x = t;
                    big_a += a;
                    break;
                }
                l *= ru;
            }
            out.push(x.clone());
        }
        out
    }

    #[test]
    fn capacity_one_is_acgm() {
        for (mu_psi, variant) in [(0.0, Variant::General), (0.0, Variant::StronglyConvex), (0.8, Variant::StronglyConvex)] {
            let (p, x0) = random_elastic(42, 9, 7, 0.2, mu_psi);
            let cfg = AgmmConfig { capacity: 1, variant, ..AgmmConfig::default() };
            let mut agmm = Agmm::new(Oracle::new(&p), x0.clone(), cfg).unwrap();
            for x_ref in reference_acgm(&p, &x0, 20, mu_psi) {
                let r = agmm.step().unwrap();
                assert_eq!(r.occupancy, 1);
                let scale = 1.0 + x_ref.dot(&x_ref).sqrt();
                let err = (agmm.iterate() - &x_ref).mapv(f64::abs).sum();
                assert!(err <= 1e-10 * scale, "mu {mu_psi}: deviation {err}");
            }
        }
    }

    #[test]
    fn bundle_entries_are_lower_bounds() {
        let (p, x0) = random_elastic(8, 10, 6, 0.3, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let cfg = AgmmConfig { variant: Variant::StronglyConvex, capacity: 6, ..AgmmConfig::default() };
        let mut agmm = Agmm::new(Oracle::new(&p), x0, cfg).unwrap();
        for _ in 0..25 {
            agmm.step().unwrap();
            let mu = agmm.mu();
            for _ in 0..20 {
                let z = Vector::from_shape_fn(6, |_| rng.random_range(-4.0..4.0));
                let fz = composite_value(&p, &z);
                let d = &z - agmm.anchor();
                for i in 0..agmm.bundle().len() {
                    let (h, g) = agmm.bundle().entry(i);
                    let lb = h + g.dot(&z) + 0.5 * mu * d.dot(&d);
                    assert!(lb <= fz + 1e-10 * (1.0 + fz.abs()));
                }
            }
        }
    }

    #[test]
    fn soft_restart_recentres_lower_bounds() {
        let (p, x0) = random_elastic(4, 10, 6, 0.3, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = AgmmConfig { variant: Variant::StronglyConvex, capacity: 6, ..AgmmConfig::default() };
        let mut agmm = Agmm::new(Oracle::new(&p), x0, cfg).unwrap();
        for round in 0..3 {
            for _ in 0..6 {
                let r = agmm.step().unwrap();
                assert!(r.psi_star.unwrap() >= r.objective - 1e-9 * (1.0 + r.objective.abs()));
            }
            agmm.restart(if round == 1 { RestartMode::Hard } else { RestartMode::Soft });
            assert_eq!(agmm.guarantee(), 0.0);
            let mu = agmm.mu();
            for _ in 0..20 {
                let z = Vector::from_shape_fn(6, |_| rng.random_range(-4.0..4.0));
                let fz = composite_value(&p, &z);
                let d = &z - agmm.anchor();
                for i in 0..agmm.bundle().len() {
                    let (h, g) = agmm.bundle().entry(i);
                    assert!(h + g.dot(&z) + 0.5 * mu * d.dot(&d) <= fz + 1e-10 * (1.0 + fz.abs()));
                }
            }
        }
    }

    #[test]
    fn strongly_convex_quadratic_decays_linearly() {
        let p = FnProblem::smooth(2, |x| 0.5 * (x[0] * x[0] + 4.0 * x[1] * x[1]), |x| array![x[0], 4.0 * x[1]])
            .with_convexity(1.0, 0.0)
            .with_lipschitz(4.0);
        let cfg = AgmmConfig { variant: Variant::StronglyConvex, ..AgmmConfig::default() };
        let mut agmm = Agmm::new(Oracle::new(&p), array![3.0, -2.0], cfg).unwrap();
        let t = run(&mut agmm, &StopRule::iterations(40)).unwrap();
        // Least-squares slope of log F over the second half of the run.
        let pts: Vec<(f64, f64)> = t.rows[1..]
            .iter()
            .filter(|r| r.objective > 1e-28)
            .map(|r| (r.iteration as f64, r.objective.ln()))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / n, sy / n);
        let slope = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / pts.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
        assert!(slope < -0.3, "slope {slope}");
    }

    #[test]
    fn dimension_checked() {
        let (p, _) = random_elastic(1, 4, 3, 0.1, 0.0);
        assert!(matches!(
            Agmm::new(Oracle::new(&p), Vector::zeros(2), AgmmConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(p.dim(), 3);
    }
}
