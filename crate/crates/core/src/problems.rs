//! Synthetic benchmark instances: LASSO, nonnegative least squares,
//! ℓ₁-regularized logistic regression, ridge regression and elastic net.
//!
//! Instances are generated with ChaCha8 seeded by `ProblemSpec::seed`, using a
//! separate stream for each purpose so that changing one recipe does not
//! perturb the others.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::CompositeProblem;
use crate::Vector;

const STREAM_MATRIX: u64 = 0;
const STREAM_RHS: u64 = 1;
const STREAM_START: u64 = 2;
const STREAM_LABELS: u64 = 3;
const STREAM_POWER: u64 = 4;

/// Relative tolerance of the power iteration for `σ_max(A)²`.
pub const POWER_TOLERANCE: f64 = 1e-8;
const POWER_MAX_ITERATIONS: usize = 100_000;

/// NNLS matrix density of the full-size and desk-size instances.
pub const FULL_SPARSITY: f64 = 0.01;
pub const DESK_SPARSITY: f64 = 0.05;

/// Nonzeros in the L1LR generating vector.
pub const LOGISTIC_SUPPORT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProblemKind {
    Lasso,
    Nnls,
    L1lr,
    Rr,
    En,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] =
        [ProblemKind::Lasso, ProblemKind::Nnls, ProblemKind::L1lr, ProblemKind::Rr, ProblemKind::En];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Lasso => "LASSO",
            ProblemKind::Nnls => "NNLS",
            ProblemKind::L1lr => "L1LR",
            ProblemKind::Rr => "RR",
            ProblemKind::En => "EN",
        }
    }

    /// Default `(rows, cols)` for quick runs.
    pub fn desk_shape(self) -> (usize, usize) {
        match self {
            ProblemKind::Lasso => (100, 100),
            ProblemKind::Nnls => (200, 200),
            ProblemKind::L1lr => (100, 200),
            ProblemKind::Rr => (100, 100),
            ProblemKind::En => (200, 100),
        }
    }

    /// Full-size `(rows, cols)`.
    pub fn full_shape(self) -> (usize, usize) {
        match self {
            ProblemKind::Lasso => (500, 500),
            ProblemKind::Nnls => (1000, 1000),
            ProblemKind::L1lr => (200, 1000),
            ProblemKind::Rr => (500, 500),
            ProblemKind::En => (1000, 500),
        }
    }

    /// Whether the regularizer is strongly convex.
    pub fn strongly_convex(self) -> bool {
        matches!(self, ProblemKind::Rr | ProblemKind::En)
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown problem kind {s:?}")))
    }
}

/// Instance recipe. Unset regularization weights take their defaults:
/// `λ₁ = 4` (LASSO), `5` (L1LR), `1.5√(2 ln n)` (EN) and
/// `λ₂ = 10⁻³ σ_max(A)²` (RR, EN).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub rows: usize,
    pub cols: usize,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub seed: u64,
    /// Fraction of nonzero entries in the NNLS matrix.
    pub sparsity: f64,
}

impl ProblemSpec {
    /// Quick instance. The NNLS density is raised to 5% so that rows keep
    /// about as many nonzeros as the full-size instance.
    pub fn desk(kind: ProblemKind, seed: u64) -> Self {
        let (rows, cols) = kind.desk_shape();
        ProblemSpec { rows, cols, sparsity: DESK_SPARSITY, ..ProblemSpec::full(kind, seed) }
    }

    pub fn full(kind: ProblemKind, seed: u64) -> Self {
        let (rows, cols) = kind.full_shape();
        ProblemSpec { kind, rows, cols, lambda1: None, lambda2: None, seed, sparsity: FULL_SPARSITY }
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "problem dimensions must be positive, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::InvalidParameter(format!("sparsity must lie in (0, 1], got {}", self.sparsity)));
        }
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
                }
            }
        }
        if self.kind.strongly_convex() && self.lambda2 == Some(0.0) {
            return Err(Error::InvalidParameter(format!("{} requires lambda2 > 0", self.kind)));
        }
        Ok(())
    }
}

/// Data matrix, dense or in coordinate form.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(Array2<f64>),
    Coordinate { rows: usize, cols: usize, entries: Vec<(usize, usize, f64)> },
}

impl Design {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Design::Dense(a) => a.dim(),
            Design::Coordinate { rows, cols, .. } => (*rows, *cols),
        }
    }

    /// `A x`.
    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            Design::Dense(a) => a.dot(x),
            Design::Coordinate { rows, entries, .. } => {
                let mut out = Vector::zeros(*rows);
                for &(i, j, v) in entries {
                    out[i] += v * x[j];
                }
                out
            }
        }
    }

    /// `Aᵀ r`.
    pub fn apply_transpose(&self, r: &Vector) -> Vector {
        match self {
            Design::Dense(a) => a.t().dot(r),
            Design::Coordinate { cols, entries, .. } => {
                let mut out = Vector::zeros(*cols);
                for &(i, j, v) in entries {
                    out[j] += v * r[i];
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            Design::Dense(a) => a.clone(),
            Design::Coordinate { rows, cols, entries } => {
                let mut a = Array2::zeros((*rows, *cols));
                for &(i, j, v) in entries {
                    a[[i, j]] += v;
                }
                a
            }
        }
    }
}

/// Componentwise soft threshold `(|x_j| − τ)_+ sgn(x_j)`.
pub fn shrinkage(x: &Vector, tau: f64) -> Vector {
    x.mapv(|v| (v.abs() - tau).max(0.0) * v.signum())
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{−z})` without overflow.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(Σ log(1 + e^{z_i}), (1/(1 + e^{−z_i}))_i)`.
pub fn logistic_pieces(z: &Vector) -> (f64, Vector) {
    (z.iter().map(|&v| softplus(v)).sum(), z.mapv(logistic))
}

/// `σ_max(A)²` by power iteration on `AᵀA`.
pub fn largest_squared_singular_value(design: &Design, rng: &mut ChaCha8Rng) -> f64 {
    let (_, n) = design.shape();
    let mut v = Vector::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
    v /= v.dot(&v).sqrt();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        let w = design.apply_transpose(&design.apply(&v));
        let next = v.dot(&w);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        let converged = (next - estimate).abs() <= POWER_TOLERANCE * next.abs();
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal_vector(n: usize, std_dev: f64, rng: &mut ChaCha8Rng) -> Vector {
    let d = Normal::new(0.0, std_dev).expect("positive standard deviation");
    Vector::from_shape_fn(n, |_| d.sample(rng))
}

#[derive(Debug, Clone, PartialEq)]
enum Smooth {
    LeastSquares { b: Vector },
    Logistic { labels: Vector },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Regularizer {
    L1(f64),
    Nonnegative,
    Ridge(f64),
    ElasticNet(f64, f64),
}

/// A generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkProblem {
    spec: ProblemSpec,
    design: Design,
    smooth: Smooth,
    regularizer: Regularizer,
    sigma_max_sq: f64,
}

impl BenchmarkProblem {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn kind(&self) -> ProblemKind {
        self.spec.kind
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    /// `σ_max(A)²`.
    pub fn sigma_max_squared(&self) -> f64 {
        self.sigma_max_sq
    }

    pub fn lambda1(&self) -> f64 {
        match self.regularizer {
            Regularizer::L1(l1) | Regularizer::ElasticNet(l1, _) => l1,
            _ => 0.0,
        }
    }

    pub fn lambda2(&self) -> f64 {
        match self.regularizer {
            Regularizer::Ridge(l2) | Regularizer::ElasticNet(_, l2) => l2,
            _ => 0.0,
        }
    }

    /// Right-hand side `b` or labels `y`.
    pub fn targets(&self) -> &Vector {
        match &self.smooth {
            Smooth::LeastSquares { b } => b,
            Smooth::Logistic { labels } => labels,
        }
    }

    /// `μ / (L_f + μ_Ψ)`.
    pub fn inverse_condition_number(&self) -> f64 {
        let mu = self.mu_f() + self.mu_psi();
        mu / (self.lipschitz_hint().unwrap_or(f64::INFINITY) + self.mu_psi())
    }
}

impl CompositeProblem for BenchmarkProblem {
    fn dim(&self) -> usize {
        self.spec.cols
    }

    fn smooth_value(&self, x: &Vector) -> f64 {
        let z = self.design.apply(x);
        match &self.smooth {
            Smooth::LeastSquares { b } => {
                let r = z - b;
                0.5 * r.dot(&r)
            }
            Smooth::Logistic { labels } => z.iter().map(|&v| softplus(v)).sum::<f64>() - labels.dot(&z),
        }
    }

    fn smooth_gradient(&self, x: &Vector) -> Vector {
        self.smooth_value_and_gradient(x).1
    }

    fn smooth_value_and_gradient(&self, x: &Vector) -> (f64, Vector) {
        let z = self.design.apply(x);
        match &self.smooth {
            Smooth::LeastSquares { b } => {
                let r = z - b;
                (0.5 * r.dot(&r), self.design.apply_transpose(&r))
            }
            Smooth::Logistic { labels } => {
                let (value, p) = logistic_pieces(&z);
                let value = value - labels.dot(&z);
                (value, self.design.apply_transpose(&(p - labels)))
            }
        }
    }

    fn regularizer(&self, x: &Vector) -> f64 {
        let l1 = || x.iter().map(|v| v.abs()).sum::<f64>();
        match self.regularizer {
            Regularizer::L1(l) => l * l1(),
            Regularizer::Nonnegative => {
                if x.iter().all(|&v| v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Regularizer::Ridge(l2) => 0.5 * l2 * x.dot(x),
            Regularizer::ElasticNet(l, l2) => l * l1() + 0.5 * l2 * x.dot(x),
        }
    }

    fn prox(&self, x: &Vector, tau: f64) -> Vector {
        match self.regularizer {
            Regularizer::L1(l) => shrinkage(x, tau * l),
            Regularizer::Nonnegative => x.mapv(|v| v.max(0.0)),
            Regularizer::Ridge(l2) => x / (1.0 + tau * l2),
            Regularizer::ElasticNet(l, l2) => shrinkage(x, tau * l) / (1.0 + tau * l2),
        }
    }

    fn mu_psi(&self) -> f64 {
        self.lambda2()
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(match self.smooth {
            Smooth::LeastSquares { .. } => self.sigma_max_sq,
            Smooth::Logistic { .. } => 0.25 * self.sigma_max_sq,
        })
    }
}

/// Generates the instance described by `spec` and its starting point.
pub fn make_problem(spec: &ProblemSpec) -> Result<(BenchmarkProblem, Vector)> {
    spec.validate()?;
    let (m, n) = (spec.rows, spec.cols);
    let mut matrix_rng = stream(spec.seed, STREAM_MATRIX);
    let mut rhs_rng = stream(spec.seed, STREAM_RHS);
    let mut start_rng = stream(spec.seed, STREAM_START);

    let design = match spec.kind {
        ProblemKind::Nnls => {
            let total = m * n;
            let count = ((spec.sparsity * total as f64).round() as usize).clamp(1, total);
            let locations = index::sample(&mut matrix_rng, total, count);
            let mut entries: Vec<(usize, usize, f64)> = locations
                .iter()
                .map(|idx| (idx / n, idx % n, matrix_rng.sample::<f64, _>(StandardNormal)))
                .collect();
            entries.sort_by_key(|&(i, j, _)| (i, j));
            Design::Coordinate { rows: m, cols: n, entries }
        }
        _ => Design::Dense(Array2::from_shape_fn((m, n), |_| matrix_rng.sample(StandardNormal))),
    };
    let sigma_max_sq = largest_squared_singular_value(&design, &mut stream(spec.seed, STREAM_POWER));
    let default_l2 = 1e-3 * sigma_max_sq;

    let (smooth, regularizer, x0) = match spec.kind {
        ProblemKind::Lasso => (
            Smooth::LeastSquares { b: normal_vector(m, 3.0, &mut rhs_rng) },
            Regularizer::L1(spec.lambda1.unwrap_or(4.0)),
            normal_vector(n, 1.0, &mut start_rng),
        ),
        ProblemKind::Nnls => (
            Smooth::LeastSquares { b: normal_vector(m, 1.0, &mut rhs_rng) },
            Regularizer::Nonnegative,
            normal_vector(n, 1.0, &mut start_rng).mapv(f64::abs),
        ),
        ProblemKind::L1lr => {
            let support = LOGISTIC_SUPPORT.min(n);
            let big = Normal::new(0.0, 15.0).expect("positive standard deviation");
            let mut x0 = Vector::zeros(n);
            for j in index::sample(&mut start_rng, n, support).iter() {
                x0[j] = big.sample(&mut start_rng);
            }
            let mut label_rng = stream(spec.seed, STREAM_LABELS);
            let probabilities = design.apply(&x0).mapv(logistic);
            let labels = probabilities.mapv(|p| if label_rng.random::<f64>() < p { 1.0 } else { 0.0 });
            (Smooth::Logistic { labels }, Regularizer::L1(spec.lambda1.unwrap_or(5.0)), x0)
        }
        ProblemKind::Rr => (
            Smooth::LeastSquares { b: normal_vector(m, 5.0, &mut rhs_rng) },
            Regularizer::Ridge(spec.lambda2.unwrap_or(default_l2)),
            normal_vector(n, 1.0, &mut start_rng),
        ),
        ProblemKind::En => (
            Smooth::LeastSquares { b: normal_vector(m, 5.0, &mut rhs_rng) },
            Regularizer::ElasticNet(
                spec.lambda1.unwrap_or(1.5 * (2.0 * (n as f64).ln()).sqrt()),
                spec.lambda2.unwrap_or(default_l2),
            ),
            normal_vector(n, 1.0, &mut start_rng),
        ),
    };
    if let Regularizer::Ridge(l2) | Regularizer::ElasticNet(_, l2) = regularizer {
        if !(l2 > 0.0) {
            return Err(Error::InvalidParameter(format!("{} requires lambda2 > 0", spec.kind)));
        }
    }
    let problem = BenchmarkProblem { spec: spec.clone(), design, smooth, regularizer, sigma_max_sq };
    Ok((problem, x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{composite_value, descent_condition, prox_grad_step, Oracle};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn small(kind: ProblemKind, seed: u64) -> ProblemSpec {
        let (rows, cols) = match kind {
            ProblemKind::Nnls => (40, 30),
            ProblemKind::L1lr => (20, 30),
            _ => (25, 20),
        };
        ProblemSpec { rows, cols, sparsity: 0.1, ..ProblemSpec::desk(kind, seed) }
    }

    fn random_point(n: usize, seed: u64, scale: f64) -> Vector {
        normal_vector(n, scale, &mut stream(seed, 77))
    }

    #[test]
    fn shrinkage_examples() {
        assert_eq!(shrinkage(&array![3.0, -0.5], 1.0), array![2.0, 0.0]);
        let x = array![1.5, -2.0, 0.25];
        assert_abs_diff_eq!(shrinkage(&x, 1e-300), x, epsilon = 1e-300);
        assert_eq!(shrinkage(&array![-3.0], 1.0), array![-2.0]);
    }

    #[test]
    fn logistic_examples() {
        let (v, p) = logistic_pieces(&Vector::zeros(4));
        assert_abs_diff_eq!(v, 4.0 * 2f64.ln(), epsilon = 1e-15);
        assert_eq!(p, Vector::from_elem(4, 0.5));
        let (v, p) = logistic_pieces(&array![1000.0, -1000.0]);
        assert!(v.is_finite());
        assert_abs_diff_eq!(v, 1000.0, epsilon = 1e-12);
        assert_eq!(p, array![1.0, 0.0]);
    }

    #[test]
    fn kind_parsing() {
        for k in ProblemKind::ALL {
            assert_eq!(k.name().to_lowercase().parse::<ProblemKind>().unwrap(), k);
        }
        assert!("ridge".parse::<ProblemKind>().is_err());
    }

    /// Central differences with step h along every coordinate.
    fn finite_difference(p: &BenchmarkProblem, x: &Vector, h: f64) -> Vector {
        Vector::from_shape_fn(x.len(), |j| {
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += h;
            b[j] -= h;
            (p.smooth_value(&a) - p.smooth_value(&b)) / (2.0 * h)
        })
    }

    #[test]
    fn gradients_match_finite_differences() {
        for kind in ProblemKind::ALL {
            let (p, _) = make_problem(&small(kind, 3)).unwrap();
            for s in 0..5 {
                let x = random_point(p.dim(), s, 0.3);
                let g = p.smooth_gradient(&x);
                let fd = finite_difference(&p, &x, 1e-5);
                let err = (&g - &fd).mapv(f64::abs).fold(0.0f64, |a, b| a.max(*b));
                let scale = g.mapv(f64::abs).fold(1.0f64, |a, b| a.max(*b));
                assert!(err <= 1e-5 * scale, "{kind}: error {err} at scale {scale}");
            }
        }
    }

    #[test]
    fn logistic_gradient_at_saturation() {
        let (p, x0) = make_problem(&small(ProblemKind::L1lr, 8)).unwrap();
        let (v, g) = p.smooth_value_and_gradient(&(&x0 * 50.0));
        assert!(v.is_finite() && g.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn prox_is_optimal() {
        for kind in ProblemKind::ALL {
            let (p, _) = make_problem(&small(kind, 5)).unwrap();
            let n = p.dim();
            for s in 0..5 {
                let x = random_point(n, 10 + s, 2.0);
                let tau = 0.1 * (s + 1) as f64;
                let z = p.prox(&x, tau);
                let obj = |u: &Vector| p.regularizer(u) + (u - &x).dot(&(u - &x)) / (2.0 * tau);
                let best = obj(&z);
                assert!(best.is_finite());
                for t in 0..100 {
                    let u = &z + &random_point(n, 1000 * s + t, 0.05);
                    assert!(best <= obj(&u) + 1e-12 * (1.0 + best.abs()), "{kind}");
                }
            }
        }
    }

    #[test]
    fn descent_at_lipschitz_hint() {
        for kind in ProblemKind::ALL {
            let (p, x0) = make_problem(&small(kind, 6)).unwrap();
            let l = p.lipschitz_hint().unwrap();
            let mut o = Oracle::new(&p);
            for s in 0..20 {
                let x = &x0 + &random_point(p.dim(), 300 + s, 1.0);
                let step = prox_grad_step(&mut o, &x, l);
                assert!(descent_condition(&step, &x), "{kind}");
            }
        }
    }

    #[test]
    fn lipschitz_matches_dense_power_iteration() {
        let (p, _) = make_problem(&small(ProblemKind::Nnls, 1)).unwrap();
        let dense = Design::Dense(p.design().to_dense());
        let again = largest_squared_singular_value(&dense, &mut stream(1, STREAM_POWER));
        assert_abs_diff_eq!(again, p.sigma_max_squared(), epsilon = 1e-9 * again);
        // Rayleigh quotients never exceed the largest eigenvalue.
        let a = p.design().to_dense();
        let gram = a.t().dot(&a);
        for s in 0..10 {
            let v = random_point(p.dim(), s, 1.0);
            assert!(v.dot(&gram.dot(&v)) / v.dot(&v) <= p.sigma_max_squared() * (1.0 + 1e-6));
        }
    }

    #[test]
    fn seeded_determinism() {
        for kind in ProblemKind::ALL {
            let spec = small(kind, 99);
            let (a, xa) = make_problem(&spec).unwrap();
            let (b, xb) = make_problem(&spec).unwrap();
            assert_eq!(a, b);
            assert_eq!(xa, xb);
            let (c, _) = make_problem(&ProblemSpec { seed: 100, ..spec }).unwrap();
            assert_ne!(a.design(), c.design());
        }
    }

    #[test]
    fn ridge_condition_number() {
        let (p, _) = make_problem(&ProblemSpec::desk(ProblemKind::Rr, 1)).unwrap();
        assert_abs_diff_eq!(p.inverse_condition_number(), 1.0 / 1001.0, epsilon = 1e-15);
        assert_eq!(p.mu_psi(), 1e-3 * p.sigma_max_squared());
        assert_eq!(p.mu_f(), 0.0);
    }

    #[test]
    fn elastic_net_prox_example() {
        let spec = ProblemSpec {
            rows: 1,
            cols: 1,
            lambda1: Some(1.0),
            lambda2: Some(1.0),
            ..ProblemSpec::desk(ProblemKind::En, 0)
        };
        let (p, _) = make_problem(&spec).unwrap();
        assert_eq!(p.prox(&array![2.0], 1.0), array![0.5]);
    }

    #[test]
    fn default_parameters() {
        let (p, _) = make_problem(&small(ProblemKind::Lasso, 1)).unwrap();
        assert_eq!(p.lambda1(), 4.0);
        let (p, _) = make_problem(&small(ProblemKind::L1lr, 1)).unwrap();
        assert_eq!(p.lambda1(), 5.0);
        assert_eq!(p.lipschitz_hint().unwrap(), 0.25 * p.sigma_max_squared());
        let (p, _) = make_problem(&small(ProblemKind::En, 1)).unwrap();
        assert_abs_diff_eq!(p.lambda1(), 1.5 * (2.0 * 20f64.ln()).sqrt(), epsilon = 1e-15);
        assert_eq!(p.lambda2(), 1e-3 * p.sigma_max_squared());
    }

    #[test]
    fn starting_points_are_feasible() {
        for kind in ProblemKind::ALL {
            let (p, x0) = make_problem(&small(kind, 2)).unwrap();
            assert!(composite_value(&p, &x0).is_finite(), "{kind}");
        }
    }

    #[test]
    fn nnls_sparsity() {
        let spec = ProblemSpec::desk(ProblemKind::Nnls, 4);
        let (p, _) = make_problem(&spec).unwrap();
        let Design::Coordinate { entries, .. } = p.design() else { panic!("dense NNLS design") };
        assert_eq!(entries.len(), 2000);
        let mut cells: Vec<_> = entries.iter().map(|&(i, j, _)| (i, j)).collect();
        cells.dedup();
        assert_eq!(cells.len(), 2000);
        assert_eq!(ProblemSpec::full(ProblemKind::Nnls, 4).sparsity, 0.01);
    }

    #[test]
    fn logistic_start_support_and_labels() {
        let (p, x0) = make_problem(&ProblemSpec::desk(ProblemKind::L1lr, 7)).unwrap();
        assert_eq!(x0.iter().filter(|v| **v != 0.0).count(), LOGISTIC_SUPPORT);
        assert!(p.targets().iter().all(|y| *y == 0.0 || *y == 1.0));
        let ones = p.targets().sum();
        assert!(ones > 0.0 && ones < p.targets().len() as f64);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = ProblemSpec::desk(ProblemKind::Lasso, 0);
        spec.rows = 0;
        assert!(make_problem(&spec).is_err());
        let spec = ProblemSpec { lambda2: Some(0.0), ..ProblemSpec::desk(ProblemKind::Rr, 0) };
        assert!(make_problem(&spec).is_err());
        let spec = ProblemSpec { sparsity: 0.0, ..ProblemSpec::desk(ProblemKind::Nnls, 0) };
        assert!(make_problem(&spec).is_err());
    }
}
