//! Simplex-constrained quadratic programs `min_λ∈Δ (s/2)λᵀQλ − ⟨b, λ⟩`.
//!
//! These are the anti-dual subproblems of both memory methods. The solver is
//! a projected fast gradient method that returns the best iterate it has seen,
//! so its output is never worse than the warm start.

use ndarray::ArrayView2;

use crate::bundle::check_simplex;
use crate::error::Result;
use crate::Vector;

/// Default stopping tolerance on the projected-gradient norm.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Tolerance on the simplex constraints accepted for warm starts.
pub const SIMPLEX_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct SimplexQp<'a> {
    pub gram: ArrayView2<'a, f64>,
    pub payload: &'a Vector,
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub weights: Vector,
    pub dual_value: f64,
    pub iterations: usize,
}

impl<'a> SimplexQp<'a> {
    pub fn new(gram: ArrayView2<'a, f64>, payload: &'a Vector, scale: f64) -> Self {
        debug_assert!(scale > 0.0);
        SimplexQp { gram, payload, scale }
    }

    pub fn dim(&self) -> usize {
        self.payload.len()
    }

    /// `d(λ) = (s/2)⟨λ, Qλ⟩ − ⟨b, λ⟩`.
    pub fn dual_value(&self, weights: &Vector) -> f64 {
        0.5 * self.scale * quad_form(self.gram, weights) - self.payload.dot(weights)
    }

    fn gradient(&self, weights: &Vector) -> Vector {
        self.gram.dot(weights) * self.scale - self.payload
    }
}

/// `⟨λ, Qλ⟩`.
pub fn quad_form(gram: ArrayView2<'_, f64>, weights: &Vector) -> f64 {
    weights.dot(&gram.dot(weights))
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(v: &Vector) -> Vector {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut w = v.mapv(|x| (x - theta).max(0.0));
    // Cancellation in `x − θ` for large inputs can leave the sum off by
    // far more than rounding; renormalize.
    let total = w.sum();
    if total > 0.0 {
        w /= total;
    } else {
        w[argmax(v)] = 1.0;
    }
    w
}

/// Unit vector `e_i` of length `p`.
pub fn unit(p: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(p);
    e[i] = 1.0;
    e
}

/// Approximately minimizes `qp` over the simplex starting from `warm_start`.
///
/// Stops after `max_iterations` gradient steps or once the projected-gradient
/// mapping has norm at most `tolerance`.
pub fn solve(
    qp: &SimplexQp<'_>,
    warm_start: &Vector,
    max_iterations: usize,
    tolerance: f64,
) -> Result<InnerSolution> {
    check_simplex(warm_start, SIMPLEX_TOLERANCE)?;
    let p = qp.dim();
    let warm_value = qp.dual_value(warm_start);
    let mut best = InnerSolution {
        weights: warm_start.clone(),
        dual_value: warm_value,
        iterations: 0,
    };
    if p == 1 {
        let w = Vector::from_elem(1, 1.0);
        let value = qp.dual_value(&w);
        if value <= best.dual_value {
            best = InnerSolution { weights: w, dual_value: value, iterations: 0 };
        }
        return Ok(best);
    }
    if max_iterations == 0 {
        return Ok(best);
    }

    let lipschitz = qp.scale * qp.gram.diag().sum();
    if !(lipschitz > 0.0) {
        // Linear objective: the best vertex is optimal.
        let i = argmax(qp.payload);
        let w = unit(p, i);
        let value = qp.dual_value(&w);
        if value < best.dual_value {
            best = InnerSolution { weights: w, dual_value: value, iterations: 1 };
        }
        return Ok(best);
    }

    let mut x = project_simplex(warm_start);
    let mut x_value = qp.dual_value(&x);
    if x_value < best.dual_value {
        best.weights = x.clone();
        best.dual_value = x_value;
    }
    let mut y = x.clone();
    let mut t = 1.0_f64;
    for it in 1..=max_iterations {
        let grad = qp.gradient(&y);
        let x_next = project_simplex(&(&y - &(&grad / lipschitz)));
        let step = &y - &x_next;
        let mapping_norm = lipschitz * step.dot(&step).sqrt();
        let next_value = qp.dual_value(&x_next);
        if next_value < best.dual_value {
            best.weights = x_next.clone();
            best.dual_value = next_value;
            best.iterations = it;
        }
        if mapping_norm <= tolerance {
            break;
        }
        if next_value > x_value {
            // Function-value restart of the momentum.
            t = 1.0;
            y = x_next.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &x_next + &((&x_next - &x) * ((t - 1.0) / t_next));
            t = t_next;
        }
        x = x_next;
        x_value = next_value;
    }
    Ok(best)
}

fn argmax(v: &Vector) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
