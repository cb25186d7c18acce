//! Operator-splitting kernel.
//!
//! Splits `x` (affine set, quadratic objective) from `z` (cone product):
//!
//! ```text
//! x⁺ = argmin cᵀx + ½xᵀQx + ρ/2‖x − z + u‖²  s.t. Ax = b
//! x̂  = αx⁺ + (1 − α)z
//! z⁺ = Π_K(x̂ + u)
//! u⁺ = u + x̂ − z⁺
//! ```
//!
//! The x-step reduces to a solve with `A D⁻¹ Aᵀ`, `D = Q + ρI`, factored
//! once per penalty value.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::program::{Cone, ConeProgram, Solution, SolveStatus, SolverSettings};
use super::svec::{smat, svec_into};
use crate::error::{QsdError, Result};
use crate::linalg::hermitian_eigh;

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const ADAPT_EVERY: usize = 50;
const ADAPT_RATIO: f64 = 10.0;
const ADAPT_MAX_STEP: f64 = 10.0;
const INFEASIBILITY_WINDOW: usize = 2_000;
const INFEASIBILITY_STALLS: usize = 2;
const GRAM_CHUNK: usize = 512;

enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    /// Pseudo-inverse for rank-deficient constraint sets.
    Pinv(DMatrix<f64>),
    Empty,
}

impl Factor {
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Cholesky(ch) => ch.solve(rhs),
            Factor::Pinv(p) => p * rhs,
            Factor::Empty => DVector::zeros(0),
        }
    }
}

/// Row-normalized constraint data.
struct Constraints {
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
    b: DVector<f64>,
}

impl Constraints {
    fn new(program: &ConeProgram) -> Result<Self> {
        let n = program.num_vars();
        let mut rows = Vec::new();
        let mut b = Vec::new();
        for (row, &rhs) in program.rows().iter().zip(program.rhs()) {
            let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                if rhs.abs() > 0.0 {
                    return Err(QsdError::Infeasible {
                        iterations: 0,
                        primal: rhs.abs(),
                    });
                }
                continue;
            }
            rows.push(row.iter().map(|&(i, v)| (i, v / norm)).collect::<Vec<_>>());
            b.push(rhs / norm);
        }
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &(i, v) in row {
                cols[i].push((r, v));
            }
        }
        Ok(Self {
            rows,
            cols,
            b: DVector::from_vec(b),
        })
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|row| row.iter().map(|&(i, v)| v * x[i]).sum()),
        )
    }

    /// `out -= scale ⊙ Aᵀy` (with per-coordinate scale).
    fn sub_transpose(&self, y: &DVector<f64>, dinv: &[f64], out: &mut [f64]) {
        for (j, col) in self.cols.iter().enumerate() {
            if col.is_empty() {
                continue;
            }
            let s: f64 = col.iter().map(|&(r, v)| v * y[r]).sum();
            out[j] -= dinv[j] * s;
        }
    }

    fn gram(&self, dinv: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let nnz: usize = self.cols.iter().map(Vec::len).sum();
        let sq: usize = self.cols.iter().map(|c| c.len() * c.len()).sum();
        if sq <= 4 * m * m + nnz * 64 {
            let mut gram = DMatrix::<f64>::zeros(m, m);
            for (j, col) in self.cols.iter().enumerate() {
                let w = dinv[j];
                for &(r1, v1) in col {
                    for &(r2, v2) in col {
                        gram[(r1, r2)] += w * v1 * v2;
                    }
                }
            }
            return gram;
        }
        // Dense coupling: accumulate A_c D_c⁻¹ A_cᵀ over column chunks.
        let mut gram = DMatrix::<f64>::zeros(m, m);
        let active: Vec<usize> = (0..self.cols.len()).filter(|&j| !self.cols[j].is_empty()).collect();
        let width = GRAM_CHUNK.min(active.len().max(1));
        let mut chunk = DMatrix::<f64>::zeros(m, width);
        for group in active.chunks(width) {
            chunk.fill(0.0);
            for (c, &j) in group.iter().enumerate() {
                let s = dinv[j].sqrt();
                for &(r, v) in &self.cols[j] {
                    chunk[(r, c)] = s * v;
                }
            }
            let used = chunk.columns(0, group.len());
            gram.gemm(1.0, &used, &used.transpose(), 1.0);
        }
        gram
    }

    fn factor(&self, dinv: &[f64]) -> Factor {
        let m = self.m();
        if m == 0 {
            return Factor::Empty;
        }
        let gram = self.gram(dinv);
        let scale = (0..m).map(|i| gram[(i, i)]).fold(0.0_f64, f64::max);
        if let Some(ch) = Cholesky::new(gram.clone()) {
            let l = ch.l_dirty();
            let min_pivot = (0..m).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_pivot * min_pivot > 1e-10 * scale {
                return Factor::Cholesky(ch);
            }
        }
        let eig = SymmetricEigen::new(gram);
        let cutoff = 1e-10 * scale.max(f64::MIN_POSITIVE);
        let mut pinv = DMatrix::<f64>::zeros(m, m);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > cutoff {
                let v = eig.eigenvectors.column(k);
                pinv += (v * v.transpose()) / lam;
            }
        }
        Factor::Pinv(pinv)
    }
}

fn project_cones(program: &ConeProgram, v: &mut [f64]) -> Result<()> {
    for (bi, cone) in program.blocks().iter().enumerate() {
        let range = program.block_range(bi);
        let slice = &mut v[range];
        match *cone {
            Cone::Free(_) => {}
            Cone::NonNeg(_) => slice.iter_mut().for_each(|x| *x = x.max(0.0)),
            Cone::PsdComplex(d) => {
                let (values, vectors) = hermitian_eigh(&smat(slice, d))?;
                if values.first().is_some_and(|&lo| lo < 0.0) {
                    let clipped = crate::linalg::spectral_map(&values, &vectors, |l| l.max(0.0));
                    svec_into(&clipped, slice);
                }
            }
        }
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Residuals {
    primal: f64,
    dual: f64,
    gap: f64,
}

impl Residuals {
    fn merit(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Solves a cone program. Deterministic for identical inputs and settings.
pub fn solve(program: &ConeProgram, settings: &SolverSettings) -> Result<Solution> {
    program.validate()?;
    if !(settings.tol > 0.0) {
        return Err(QsdError::InvalidParameter("solver tolerance must be positive".into()));
    }
    if settings.max_iters == 0 {
        return Err(QsdError::InvalidParameter("max_iters must be at least 1".into()));
    }
    if !(settings.relaxation > 0.0 && settings.relaxation < 2.0) {
        return Err(QsdError::InvalidParameter("relaxation must lie in (0, 2)".into()));
    }
    let n = program.num_vars();
    let cons = Constraints::new(program)?;
    let c = program.objective();
    let q: Vec<f64> = program.quad_diag().map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let c_norm = norm(c);
    let b_orig_norm = norm(program.rhs());
    let alpha = settings.relaxation;

    let mut rho = settings.rho.clamp(RHO_MIN, RHO_MAX);
    let mut dinv: Vec<f64> = q.iter().map(|w| 1.0 / (w + rho)).collect();
    // Without a quadratic term A D⁻¹ Aᵀ = AAᵀ/ρ: factor AAᵀ once and rescale.
    let linear = q.iter().all(|&w| w == 0.0);
    let factor = if linear {
        cons.factor(&vec![1.0; n])
    } else {
        cons.factor(&dinv)
    };
    let mut factor_rho = if linear { 1.0 } else { rho };
    let mut factor = factor;

    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut z_prev = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut t = vec![0.0; n];

    let mut best: Option<(f64, Vec<f64>, Residuals)> = None;
    let mut checkpoint: Option<(usize, f64, Vec<f64>)> = None;
    let mut stalls = 0;
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;

    for iter in 1..=settings.max_iters {
        iterations = iter;
        // x-step
        for j in 0..n {
            t[j] = dinv[j] * (rho * (z[j] - u[j]) - c[j]);
        }
        let y = if cons.m() > 0 {
            let rhs = cons.apply(&t) - &cons.b;
            let y = factor.solve(&rhs) * (rho / factor_rho);
            x.copy_from_slice(&t);
            cons.sub_transpose(&y, &dinv, &mut x);
            y
        } else {
            x.copy_from_slice(&t);
            DVector::zeros(0)
        };

        // z-step on the relaxed point
        z_prev.copy_from_slice(&z);
        for j in 0..n {
            let xh = alpha * x[j] + (1.0 - alpha) * z_prev[j];
            t[j] = xh;
            z[j] = xh + u[j];
        }
        project_cones(program, &mut z)?;
        for j in 0..n {
            u[j] += t[j] - z[j];
        }

        // residuals
        let consensus = diff_norm(&x, &z);
        let affine = norm(&program.constraint_residual(&z)) / (1.0 + b_orig_norm);
        let primal = consensus.max(affine);
        let dual = rho * diff_norm(&z, &z_prev) / (1.0 + c_norm);
        let pobj = program.evaluate_objective(&z);
        let quad_zz: f64 = q.iter().zip(&z).map(|(w, v)| w * v * v).sum();
        let lin = dot(c, &z);
        let dobj = -cons.b.dot(&y) - 0.5 * quad_zz;
        let gap = (lin + quad_zz + cons.b.dot(&y)).abs() / (1.0 + pobj.abs() + dobj.abs());
        let res = Residuals { primal, dual, gap };
        let merit = res.merit();

        if best.as_ref().is_none_or(|(m, _, _)| merit < *m) {
            match best.as_mut() {
                Some((m, bz, br)) => {
                    *m = merit;
                    bz.copy_from_slice(&z);
                    *br = res;
                }
                None => best = Some((merit, z.clone(), res)),
            }
        }
        if merit <= settings.tol {
            status = SolveStatus::Optimal;
            break;
        }

        // Persistent drift of u with a stalled consensus residual means the
        // affine set and the cone do not intersect.
        if iter % INFEASIBILITY_WINDOW == 0 {
            if let Some((start, prev_consensus, u_start)) = checkpoint.as_ref() {
                let steps = (iter - start) as f64;
                let drift = diff_norm(&u, u_start) / steps;
                let stalled = consensus > (1e3 * settings.tol).max(1e-6)
                    && consensus >= 0.95 * prev_consensus
                    && drift >= 0.5 * consensus / alpha.max(1.0);
                stalls = if stalled { stalls + 1 } else { 0 };
                if stalls >= INFEASIBILITY_STALLS {
                    status = SolveStatus::Infeasible;
                    break;
                }
            }
            checkpoint = Some((iter, consensus, u.clone()));
        }

        if settings.adaptive_rho && iter % ADAPT_EVERY == 0 {
            // Balance residuals relative to their natural scales, so a tiny
            // objective gradient does not hide a large relative dual residual.
            let p_rel = consensus / norm(&x).max(norm(&z)).max(1e-12);
            let grad: Vec<f64> = c.iter().zip(&q).zip(&z).map(|((ci, qi), zi)| ci + qi * zi).collect();
            let d_scale = norm(&grad).max(rho * norm(&u)).max(1e-12);
            let d_rel = rho * diff_norm(&z, &z_prev) / d_scale;
            let ratio = if d_rel > 0.0 { p_rel / d_rel } else { f64::INFINITY };
            let new_rho = if !(1.0 / ADAPT_RATIO..=ADAPT_RATIO).contains(&ratio) {
                rho * ratio.sqrt().clamp(1.0 / ADAPT_MAX_STEP, ADAPT_MAX_STEP)
            } else {
                rho
            }
            .clamp(RHO_MIN, RHO_MAX);
            if new_rho != rho {
                let ratio = rho / new_rho;
                u.iter_mut().for_each(|v| *v *= ratio);
                rho = new_rho;
                dinv = q.iter().map(|w| 1.0 / (w + rho)).collect();
                if !linear {
                    factor = cons.factor(&dinv);
                    factor_rho = rho;
                }
                checkpoint = None;
                stalls = 0;
            }
        }
    }

    let (_, z_best, res) = best.expect("at least one iteration runs when max_iters > 0");
    if status == SolveStatus::Infeasible {
        return Ok(Solution {
            objective: program.evaluate_objective(&z),
            x: z,
            status,
            primal_residual: res.primal,
            dual_residual: res.dual,
            gap: res.gap,
            iterations,
        });
    }
    Ok(Solution {
        objective: program.evaluate_objective(&z_best),
        x: z_best,
        status,
        primal_residual: res.primal,
        dual_residual: res.dual,
        gap: res.gap,
        iterations,
    })
}
