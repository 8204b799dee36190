//! Piece-wise linear model `max_i H_i + ⟨G_i, x⟩` with its Gram matrix.

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vector;

/// Gram matrix is recomputed from scratch after this many mutations.
pub const GRAM_REFRESH_PERIOD: usize = 64;

/// Which entry to evict when the bundle is full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplacementStrategy {
    /// Oldest unprotected entry (CRS).
    Cyclic,
    /// Unprotected entry with the largest gradient norm (MRS).
    MaxNorm,
}

/// Capacity-bounded collection of affine lower bounds.
#[derive(Debug, Clone)]
pub struct Bundle {
    capacity: usize,
    dim: usize,
    strategy: ReplacementStrategy,
    scalars: Vec<f64>,
    gradients: Vec<Vector>,
    gram: Array2<f64>,
    cursor: usize,
    mutations: usize,
}

impl Bundle {
    pub fn new(capacity: usize, dim: usize, strategy: ReplacementStrategy) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter("bundle capacity must be positive".into()));
        }
        Ok(Bundle {
            capacity,
            dim,
            strategy,
            scalars: Vec::with_capacity(capacity),
            gradients: Vec::with_capacity(capacity),
            gram: Array2::zeros((capacity, capacity)),
            cursor: 0,
            mutations: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.scalars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scalars.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.capacity
    }

    pub fn strategy(&self) -> ReplacementStrategy {
        self.strategy
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn scalars(&self) -> &[f64] {
        &self.scalars
    }

    pub fn gradient(&self, slot: usize) -> &Vector {
        &self.gradients[slot]
    }

    pub fn entry(&self, slot: usize) -> (f64, &Vector) {
        (self.scalars[slot], &self.gradients[slot])
    }

    /// Active `p × p` block of `Q = GᵀG`.
    pub fn gram(&self) -> ArrayView2<'_, f64> {
        let p = self.len();
        self.gram.slice(s![..p, ..p])
    }

    /// Adds an entry, evicting an unprotected one if the bundle is full.
    pub fn insert(&mut self, h: f64, g: Vector, protected: &[usize]) -> Result<usize> {
        self.check_dim(&g)?;
        let slot = if !self.is_full() {
            self.scalars.push(h);
            self.gradients.push(g);
            self.len() - 1
        } else {
            let slot = self.eviction_slot(protected)?;
            self.scalars[slot] = h;
            self.gradients[slot] = g;
            slot
        };
        self.after_write(slot);
        Ok(slot)
    }

    /// Replaces the entry at `slot`; `slot == len()` appends.
    pub fn overwrite_slot(&mut self, slot: usize, h: f64, g: Vector) -> Result<()> {
        self.check_dim(&g)?;
        let count = self.len();
        if slot > count || slot >= self.capacity {
            return Err(Error::SlotOutOfRange { slot, count });
        }
        if slot == count {
            self.scalars.push(h);
            self.gradients.push(g);
        } else {
            self.scalars[slot] = h;
            self.gradients[slot] = g;
        }
        self.after_write(slot);
        Ok(())
    }

    /// `H + Gᵀ anchor`.
    pub fn linear_payload(&self, anchor: &Vector) -> Vector {
        self.scalars
            .iter()
            .zip(&self.gradients)
            .map(|(h, g)| h + g.dot(anchor))
            .collect()
    }

    /// `G λ`.
    pub fn combine(&self, weights: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for (w, g) in weights.iter().zip(&self.gradients) {
            if *w != 0.0 {
                out.scaled_add(*w, g);
            }
        }
        out
    }

    /// `(⟨λ, H⟩, G λ)` for simplex weights `λ`.
    pub fn aggregate(&self, weights: &Vector) -> Result<(f64, Vector)> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: weights.len() });
        }
        check_simplex(weights, 1e-8)?;
        let h = weights.iter().zip(&self.scalars).map(|(w, h)| w * h).sum();
        Ok((h, self.combine(weights)))
    }

    /// Adds `(δh, δg)` to every entry.
    pub fn shift_all(&mut self, delta_h: f64, delta_g: &Vector) {
        for (h, g) in self.scalars.iter_mut().zip(self.gradients.iter_mut()) {
            *h += delta_h;
            *g += delta_g;
        }
        self.refresh_gram();
    }

    pub fn clear(&mut self) {
        self.scalars.clear();
        self.gradients.clear();
        self.cursor = 0;
        self.mutations = 0;
        self.gram.fill(0.0);
    }

    /// Recomputes `Q = GᵀG` exactly.
    pub fn refresh_gram(&mut self) {
        let p = self.len();
        for i in 0..p {
            for j in i..p {
                let v = self.gradients[i].dot(&self.gradients[j]);
                self.gram[[i, j]] = v;
                self.gram[[j, i]] = v;
            }
        }
    }

    fn check_dim(&self, g: &Vector) -> Result<()> {
        if g.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: g.len() });
        }
        Ok(())
    }

    fn eviction_slot(&mut self, protected: &[usize]) -> Result<usize> {
        let free = (0..self.capacity).filter(|i| !protected.contains(i));
        match self.strategy {
            ReplacementStrategy::Cyclic => {
                if free.count() == 0 {
                    return Err(Error::BundleExhausted);
                }
                while protected.contains(&self.cursor) {
                    self.cursor = (self.cursor + 1) % self.capacity;
                }
                let slot = self.cursor;
                self.cursor = (self.cursor + 1) % self.capacity;
                Ok(slot)
            }
            ReplacementStrategy::MaxNorm => {
                let mut best: Option<usize> = None;
                for i in free {
                    // Strict comparison keeps the lowest index on ties.
                    if best.is_none_or(|b| self.gram[[i, i]] > self.gram[[b, b]]) {
                        best = Some(i);
                    }
                }
                best.ok_or(Error::BundleExhausted)
            }
        }
    }

    fn after_write(&mut self, slot: usize) {
        self.mutations += 1;
        if self.mutations.is_multiple_of(GRAM_REFRESH_PERIOD) {
            self.refresh_gram();
            return;
        }
        let g = &self.gradients[slot];
        for j in 0..self.len() {
            let v = self.gradients[j].dot(g);
            self.gram[[slot, j]] = v;
            self.gram[[j, slot]] = v;
        }
    }
}

/// Checks `λ ≥ −tol` componentwise and `|Σλ − 1| ≤ tol`.
pub fn check_simplex(weights: &Vector, tol: f64) -> Result<()> {
    let sum: f64 = weights.sum();
    let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    if (sum - 1.0).abs() > tol || min < -tol || !sum.is_finite() {
        return Err(Error::NotInSimplex { sum, min });
    }
    Ok(())
}
