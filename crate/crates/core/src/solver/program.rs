use std::ops::Range;

use super::svec::svec_len;
use crate::error::{QsdError, Result};

/// One block of the variable vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// Complex Hermitian PSD matrices of the given size, stored as svec.
    PsdComplex(usize),
    NonNeg(usize),
    Free(usize),
}

impl Cone {
    pub fn len(&self) -> usize {
        match *self {
            Cone::PsdComplex(d) => svec_len(d),
            Cone::NonNeg(n) | Cone::Free(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `minimize cᵀx + ½ xᵀ diag(q) x  subject to  A x = b,  x ∈ K₁ × … × K_p`.
///
/// Constraint rows are stored sparsely; duplicate column entries within a
/// row are summed.
#[derive(Debug, Clone, Default)]
pub struct ConeProgram {
    blocks: Vec<Cone>,
    offsets: Vec<usize>,
    num_vars: usize,
    c: Vec<f64>,
    quad_diag: Option<Vec<f64>>,
    rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
}

impl ConeProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a block and returns its coordinate range.
    pub fn add_block(&mut self, cone: Cone) -> Range<usize> {
        let start = self.num_vars;
        self.blocks.push(cone);
        self.offsets.push(start);
        self.num_vars += cone.len();
        self.c.resize(self.num_vars, 0.0);
        if let Some(q) = self.quad_diag.as_mut() {
            q.resize(self.num_vars, 0.0);
        }
        start..self.num_vars
    }

    /// Adds the row `Σ coeff·x[idx] = rhs`.
    pub fn add_constraint(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let mut row: Vec<(usize, f64)> = terms.into_iter().filter(|&(_, v)| v != 0.0).collect();
        row.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (i, v) in row {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.rows.push(merged);
        self.b.push(rhs);
    }

    pub fn add_objective(&mut self, idx: usize, coeff: f64) {
        self.c[idx] += coeff;
    }

    pub fn add_quadratic(&mut self, idx: usize, weight: f64) {
        let n = self.num_vars;
        let q = self.quad_diag.get_or_insert_with(|| vec![0.0; n]);
        q[idx] += weight;
    }

    pub fn blocks(&self) -> &[Cone] {
        &self.blocks
    }

    pub fn block_range(&self, block: usize) -> Range<usize> {
        let start = self.offsets[block];
        start..start + self.blocks[block].len()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }

    pub fn quad_diag(&self) -> Option<&[f64]> {
        self.quad_diag.as_deref()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    /// `cᵀx + ½ xᵀ diag(q) x`.
    pub fn evaluate_objective(&self, x: &[f64]) -> f64 {
        let lin: f64 = self.c.iter().zip(x).map(|(a, b)| a * b).sum();
        let quad: f64 = self
            .quad_diag
            .as_ref()
            .map(|q| q.iter().zip(x).map(|(w, v)| 0.5 * w * v * v).sum())
            .unwrap_or(0.0);
        lin + quad
    }

    /// `A x - b`.
    pub fn constraint_residual(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.b)
            .map(|(row, rhs)| row.iter().map(|&(i, v)| v * x[i]).sum::<f64>() - rhs)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(QsdError::InvalidProblem("program has no variables".into()));
        }
        if let Some(q) = &self.quad_diag {
            if q.iter().any(|&w| !(w >= 0.0)) {
                return Err(QsdError::InvalidProblem("quadratic weights must be nonnegative".into()));
            }
        }
        if self.c.iter().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(QsdError::InvalidProblem(
                "non-finite objective or right-hand side".into(),
            ));
        }
        for row in &self.rows {
            if row.iter().any(|&(i, v)| i >= self.num_vars || !v.is_finite()) {
                return Err(QsdError::InvalidProblem(
                    "constraint row references an invalid column".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Returned iterate; always inside the cone product.
    pub x: Vec<f64>,
    pub status: SolveStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Relative duality gap at the returned iterate.
    pub gap: f64,
    pub objective: f64,
    pub iterations: usize,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iters: usize,
    /// Initial ADMM penalty.
    pub rho: f64,
    /// Over-relaxation factor in (0, 2).
    pub relaxation: f64,
    /// Residual balancing of the penalty.
    pub adaptive_rho: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 200_000,
            rho: 1.0,
            relaxation: 1.6,
            adaptive_rho: true,
        }
    }
}

impl SolverSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}
