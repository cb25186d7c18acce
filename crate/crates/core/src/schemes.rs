//! Discrimination strategies compiled into cone programs.
//!
//! Every scheme uses one complex PSD block per POVM element: `Π_1..Π_k`,
//! plus `Π_?` for schemes with an inconclusive outcome. Completeness
//! `Σ Π = I` is imposed coordinate-wise on the svec parametrization.
//! Inequalities are turned into equalities with nonnegative slacks.

use std::ops::Range;

use crate::error::{QsdError, Result};
use crate::linalg::{hermitian_eigh, hermitize, identity, inv_sqrt_pd, psd_project, CMatrix};
use crate::metrics::{joint_distribution, JointDistribution};
use crate::povm::{Label, Povm};
use crate::solver::svec::{smat, svec};
use crate::solver::{solve, Cone, ConeProgram, Solution, SolveStatus, SolverSettings};
use crate::states::ProblemSpec;

/// Completeness deviation above which decoding is refused.
pub const DECODE_COMPLETENESS_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrioBound {
    #[default]
    AtLeast,
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Med,
    MedPlus,
    Uqsd,
    Frio {
        rate: f64,
        bound: FrioBound,
    },
    CrossQsd {
        alpha: Vec<f64>,
        beta: Vec<f64>,
    },
    /// `ell = 1` is MinL1, `ell = 2` is MinSS.
    FitMinLp {
        ell: u8,
        reference: JointDistribution,
    },
    FitMeco {
        reference: JointDistribution,
    },
    Hybrid {
        w: f64,
        ell: u8,
        reference: JointDistribution,
    },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Med => "med",
            Scheme::MedPlus => "med-plus",
            Scheme::Uqsd => "uqsd",
            Scheme::Frio { .. } => "frio",
            Scheme::CrossQsd { .. } => "crossqsd",
            Scheme::FitMinLp { ell: 1, .. } => "fit-min-l1",
            Scheme::FitMinLp { .. } => "fit-min-ss",
            Scheme::FitMeco { .. } => "fit-meco",
            Scheme::Hybrid { .. } => "hybrid",
        }
    }

    pub fn has_inconclusive(&self) -> bool {
        !matches!(self, Scheme::Med)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Noise level assumed while solving.
    pub lambda_eval: f64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, lambda_eval: f64) -> Self {
        Self { scheme, lambda_eval }
    }
}

/// POVM element `Π = B X B†` with `X ⪰ 0` stored in a PSD block. `B = I`
/// when no face restriction applies; an empty basis pins `Π = 0`.
#[derive(Debug, Clone)]
struct Element {
    label: Label,
    range: Range<usize>,
    basis: Option<CMatrix>,
}

impl Element {
    fn rank(&self, dim: usize) -> usize {
        self.basis.as_ref().map_or(dim, |b| b.ncols())
    }

    fn compress(&self, m: &CMatrix) -> CMatrix {
        match &self.basis {
            Some(b) => b.adjoint() * m * b,
            None => m.clone(),
        }
    }

    fn expand(&self, x: &CMatrix) -> CMatrix {
        match &self.basis {
            Some(b) => b * x * b.adjoint(),
            None => x.clone(),
        }
    }
}

/// A cone program plus the map from its PSD blocks back to POVM labels.
#[derive(Debug, Clone)]
pub struct CompiledScheme {
    pub program: ConeProgram,
    dim: usize,
    elements: Vec<Element>,
    /// Whether the solver minimizes `-P_succ` (reported values are negated).
    maximizes: bool,
}

impl CompiledScheme {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Objective in the scheme's own sense (maximized value for success
    /// probability schemes, minimized deviation for FitMinLp).
    pub fn scheme_objective(&self, solution: &Solution) -> f64 {
        // `+ 0.0` turns a negated zero into a plain zero.
        if self.maximizes {
            -solution.objective + 0.0
        } else {
            solution.objective + 0.0
        }
    }
}

fn sparse_terms(start: usize, v: &[f64], scale: f64) -> Vec<(usize, f64)> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(t, x)| (start + t, scale * x))
        .collect()
}

struct Builder {
    program: ConeProgram,
    dim: usize,
    k: usize,
    priors: Vec<f64>,
    elements: Vec<Element>,
    /// `svec(B_j† E_λ(ρ_i) B_j)` indexed `[outcome][state]`.
    reduced: Vec<Vec<Vec<f64>>>,
}

impl Builder {
    fn new(spec: &ProblemSpec, lambda_eval: f64, inconclusive: bool) -> Result<Self> {
        let n = spec.num_states() + usize::from(inconclusive);
        Self::with_bases(spec, lambda_eval, vec![None; n])
    }

    /// `bases` holds one optional face basis per element: `k` conclusive
    /// ones, then optionally the inconclusive one.
    fn with_bases(spec: &ProblemSpec, lambda_eval: f64, bases: Vec<Option<CMatrix>>) -> Result<Self> {
        let k = spec.num_states();
        if k < 2 {
            return Err(QsdError::InvalidProblem(format!("need at least two states, got {k}")));
        }
        let dim = spec.dim();
        let noisy = spec.noisy_states(lambda_eval)?;
        let mut program = ConeProgram::new();
        let mut elements = Vec::new();
        for (j, basis) in bases.into_iter().enumerate() {
            let label = if j < k {
                Label::Conclusive(j)
            } else {
                Label::Inconclusive
            };
            let r = basis.as_ref().map_or(dim, |b| b.ncols());
            let range = if r == 0 {
                let at = program.num_vars();
                at..at
            } else {
                program.add_block(Cone::PsdComplex(r))
            };
            elements.push(Element { label, range, basis });
        }
        let reduced = elements
            .iter()
            .map(|e| noisy.iter().map(|rho| svec(&e.compress(rho.matrix()))).collect())
            .collect();

        // Completeness, coordinate t of svec: Tr(E_t Σ B X B†) = svec(I)_t.
        let id = svec(&identity(dim));
        for (t, &rhs) in id.iter().enumerate() {
            let mut unit = vec![0.0; id.len()];
            unit[t] = 1.0;
            let e_t = smat(&unit, dim);
            let mut terms = Vec::new();
            for e in &elements {
                if e.range.is_empty() {
                    continue;
                }
                match &e.basis {
                    None => terms.push((e.range.start + t, 1.0)),
                    Some(_) => terms.extend(sparse_terms(e.range.start, &svec(&e.compress(&e_t)), 1.0)),
                }
            }
            program.add_constraint(terms, rhs);
        }
        Ok(Self {
            program,
            dim,
            k,
            priors: spec.priors().to_vec(),
            elements,
            reduced,
        })
    }

    /// Terms of `scale · Tr(E_λ(ρ_state) Π_outcome)`; outcome `k` is `Π_?`.
    fn trace_terms(&self, state: usize, outcome: usize, scale: f64) -> Vec<(usize, f64)> {
        let e = &self.elements[outcome];
        if e.range.is_empty() {
            return Vec::new();
        }
        sparse_terms(e.range.start, &self.reduced[outcome][state], scale)
    }

    /// Terms of the joint probability `p_i Tr(E_λ(ρ_i) Π_j)`.
    fn joint_terms(&self, i: usize, j: usize) -> Vec<(usize, f64)> {
        self.trace_terms(i, j, self.priors[i])
    }

    fn add_success_objective(&mut self, weight: f64) {
        for i in 0..self.k {
            for (idx, v) in self.joint_terms(i, i) {
                self.program.add_objective(idx, -weight * v);
            }
        }
    }

    fn slack(&mut self) -> usize {
        self.program.add_block(Cone::NonNeg(1)).start
    }

    /// `Σ terms ≥ rhs`.
    fn add_at_least(&mut self, mut terms: Vec<(usize, f64)>, rhs: f64) {
        let s = self.slack();
        terms.push((s, -1.0));
        self.program.add_constraint(terms, rhs);
    }

    /// `Σ terms ≤ rhs`.
    fn add_at_most(&mut self, mut terms: Vec<(usize, f64)>, rhs: f64) {
        let s = self.slack();
        terms.push((s, 1.0));
        self.program.add_constraint(terms, rhs);
    }

    /// Adds `weight · Σ_{i≤k, j≤k+1} |joint_ij - ref_ij|^ell` to the
    /// minimized objective.
    fn add_deviation(&mut self, reference: &JointDistribution, ell: u8, weight: f64) -> Result<()> {
        if reference.k() != self.k {
            return Err(QsdError::InvalidParameter(format!(
                "reference has {} rows for {} states",
                reference.k(),
                self.k
            )));
        }
        if self.elements.len() != self.k + 1 {
            return Err(QsdError::InvalidParameter(
                "deviation terms need an inconclusive element".into(),
            ));
        }
        for i in 0..self.k {
            for j in 0..=self.k {
                let mut terms = self.joint_terms(i, j);
                let target = reference.get(i, j);
                match ell {
                    1 => {
                        // joint - e⁺ + e⁻ = ref, cost e⁺ + e⁻
                        let plus = self.slack();
                        let minus = self.slack();
                        terms.push((plus, -1.0));
                        terms.push((minus, 1.0));
                        self.program.add_constraint(terms, target);
                        self.program.add_objective(plus, weight);
                        self.program.add_objective(minus, weight);
                    }
                    2 => {
                        // joint - s = ref, cost s²
                        let s = self.program.add_block(Cone::Free(1)).start;
                        terms.push((s, -1.0));
                        self.program.add_constraint(terms, target);
                        self.program.add_quadratic(s, 2.0 * weight);
                    }
                    other => {
                        return Err(QsdError::InvalidParameter(format!(
                            "norm order {other} not supported (use 1 or 2)"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(self, maximizes: bool) -> CompiledScheme {
        CompiledScheme {
            program: self.program,
            dim: self.dim,
            elements: self.elements,
            maximizes,
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(QsdError::InvalidParameter(format!("{name} = {v} outside [0, 1]")))
    }
}

/// Minimum-error discrimination: maximize `Σ p_i Tr(ρ'_i Π_i)`.
pub fn build_med(spec: &ProblemSpec, lambda_eval: f64) -> Result<CompiledScheme> {
    let mut b = Builder::new(spec, lambda_eval, false)?;
    b.add_success_objective(1.0);
    Ok(b.finish(true))
}

/// MED with an extra inconclusive element that does not enter the objective.
pub fn build_med_plus(spec: &ProblemSpec, lambda_eval: f64) -> Result<CompiledScheme> {
    let mut b = Builder::new(spec, lambda_eval, true)?;
    b.add_success_objective(1.0);
    Ok(b.finish(true))
}

/// Optimal unambiguous discrimination: `Tr(ρ'_i Π_j) = 0` for all `i ≠ j`.
pub fn build_uqsd(spec: &ProblemSpec, lambda_eval: f64) -> Result<CompiledScheme> {
    let k = spec.num_states();
    let noisy = spec.noisy_states(lambda_eval)?;
    // Tr(ρ'_i Π_j) = 0 with Π_j ⪰ 0 confines Π_j to the common kernel of
    // the other states. Parametrizing that face directly keeps the program
    // strictly feasible.
    let mut bases = Vec::with_capacity(k + 1);
    for j in 0..k {
        let others = noisy
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .fold(CMatrix::zeros(spec.dim(), spec.dim()), |acc, (_, r)| acc + r.matrix());
        bases.push(Some(kernel_basis(&others)?));
    }
    bases.push(None);
    let mut b = Builder::with_bases(spec, lambda_eval, bases)?;
    b.add_success_objective(1.0);
    Ok(b.finish(true))
}

/// Eigenvalues at or below this count as zero when locating kernels.
pub const KERNEL_TOL: f64 = 1e-10;

/// Orthonormal basis (as columns) of the eigenspace of a PSD matrix with
/// eigenvalues `≤ KERNEL_TOL`.
fn kernel_basis(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigh(m)?;
    let cols: Vec<_> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= KERNEL_TOL)
        .map(|(i, _)| vectors.column(i).into_owned())
        .collect();
    Ok(CMatrix::from_fn(m.nrows(), cols.len(), |r, c| cols[c][r]))
}

/// MED⁺ with the inconclusive rate `Σ p_i Tr(ρ'_i Π_?)` bounded by `rate`.
pub fn build_frio(spec: &ProblemSpec, lambda_eval: f64, rate: f64, bound: FrioBound) -> Result<CompiledScheme> {
    check_unit("rate", rate)?;
    let mut b = Builder::new(spec, lambda_eval, true)?;
    b.add_success_objective(1.0);
    let k = b.k;
    let terms: Vec<_> = (0..k).flat_map(|i| b.joint_terms(i, k)).collect();
    match bound {
        FrioBound::AtLeast => b.add_at_least(terms, rate),
        FrioBound::AtMost => b.add_at_most(terms, rate),
    }
    Ok(b.finish(true))
}

/// MED⁺ with per-state confidence bounds, linearized by clearing the
/// (nonnegative) denominators:
///
/// - `Tr(ρ'_i Π_i) ≥ (1 - α_i) Σ_{j≤k} Tr(ρ'_i Π_j)`
/// - `p_i Tr(ρ'_i Π_i) ≥ (1 - β_i) Σ_{j≤k} p_j Tr(ρ'_j Π_i)`
pub fn build_crossqsd(spec: &ProblemSpec, lambda_eval: f64, alpha: &[f64], beta: &[f64]) -> Result<CompiledScheme> {
    let k = spec.num_states();
    if alpha.len() != k || beta.len() != k {
        return Err(QsdError::InvalidParameter(format!(
            "alpha and beta need {k} entries (got {} and {})",
            alpha.len(),
            beta.len()
        )));
    }
    for (&a, &bt) in alpha.iter().zip(beta) {
        check_unit("alpha", a)?;
        check_unit("beta", bt)?;
    }
    let mut b = Builder::new(spec, lambda_eval, true)?;
    b.add_success_objective(1.0);
    for i in 0..k {
        let mut terms = b.trace_terms(i, i, 1.0);
        for j in 0..k {
            terms.extend(b.trace_terms(i, j, -(1.0 - alpha[i])));
        }
        b.add_at_least(terms, 0.0);

        let mut terms = b.joint_terms(i, i);
        for j in 0..k {
            terms.extend(b.trace_terms(j, i, -(1.0 - beta[i]) * b.priors[j]));
        }
        b.add_at_least(terms, 0.0);
    }
    Ok(b.finish(true))
}

/// Minimizes `Σ |ref_ij - p_i Tr(ρ'_i Π_j)|^ell`, `ell ∈ {1, 2}`.
pub fn build_fit_min_lp(
    spec: &ProblemSpec,
    lambda_eval: f64,
    ell: u8,
    reference: &JointDistribution,
) -> Result<CompiledScheme> {
    let mut b = Builder::new(spec, lambda_eval, true)?;
    b.add_deviation(reference, ell, 1.0)?;
    Ok(b.finish(false))
}

/// Maximizes success with the reference diagonal as upper bounds and the
/// reference off-diagonal (conclusive) entries as lower bounds.
pub fn build_fit_meco(spec: &ProblemSpec, lambda_eval: f64, reference: &JointDistribution) -> Result<CompiledScheme> {
    let mut b = Builder::new(spec, lambda_eval, true)?;
    if reference.k() != b.k {
        return Err(QsdError::InvalidParameter(format!(
            "reference has {} rows for {} states",
            reference.k(),
            b.k
        )));
    }
    b.add_success_objective(1.0);
    for i in 0..b.k {
        for j in 0..b.k {
            let terms = b.joint_terms(i, j);
            if i == j {
                b.add_at_most(terms, reference.get(i, i));
            } else {
                b.add_at_least(terms, reference.get(i, j));
            }
        }
    }
    Ok(b.finish(true))
}

/// Maximizes `P_succ - w Σ |ref_ij - p_i Tr(ρ'_i Π_j)|^ell`.
pub fn build_hybrid(
    spec: &ProblemSpec,
    lambda_eval: f64,
    w: f64,
    ell: u8,
    reference: &JointDistribution,
) -> Result<CompiledScheme> {
    if !(w >= 0.0) || !w.is_finite() {
        return Err(QsdError::InvalidParameter(format!(
            "weight w = {w} must be finite and nonnegative"
        )));
    }
    let mut b = Builder::new(spec, lambda_eval, true)?;
    b.add_success_objective(1.0);
    if w > 0.0 {
        b.add_deviation(reference, ell, w)?;
    } else if ell != 1 && ell != 2 {
        return Err(QsdError::InvalidParameter(format!(
            "norm order {ell} not supported (use 1 or 2)"
        )));
    }
    Ok(b.finish(true))
}

pub fn compile(spec: &ProblemSpec, config: &SchemeConfig) -> Result<CompiledScheme> {
    check_unit("lambda_eval", config.lambda_eval)?;
    let le = config.lambda_eval;
    match &config.scheme {
        Scheme::Med => build_med(spec, le),
        Scheme::MedPlus => build_med_plus(spec, le),
        Scheme::Uqsd => build_uqsd(spec, le),
        Scheme::Frio { rate, bound } => build_frio(spec, le, *rate, *bound),
        Scheme::CrossQsd { alpha, beta } => build_crossqsd(spec, le, alpha, beta),
        Scheme::FitMinLp { ell, reference } => build_fit_min_lp(spec, le, *ell, reference),
        Scheme::FitMeco { reference } => build_fit_meco(spec, le, reference),
        Scheme::Hybrid { w, ell, reference } => build_hybrid(spec, le, *w, *ell, reference),
    }
}

/// Extracts the POVM from a solution: each block is symmetrized and
/// projected onto the PSD cone, then the set is rescaled by `S^{-1/2}`
/// (`S = Σ Π`) so completeness holds to machine precision.
pub fn decode_povm(compiled: &CompiledScheme, solution: &Solution) -> Result<Povm> {
    let dim = compiled.dim;
    let mut elements = Vec::with_capacity(compiled.elements.len());
    let mut labels = Vec::with_capacity(compiled.elements.len());
    for e in &compiled.elements {
        let r = e.rank(dim);
        let inner = if r == 0 {
            CMatrix::zeros(0, 0)
        } else {
            psd_project(&hermitize(&smat(&solution.x[e.range.clone()], r)))?
        };
        elements.push(hermitize(&e.expand(&inner)));
        labels.push(e.label);
    }
    let sum = elements.iter().fold(CMatrix::zeros(dim, dim), |acc, e| acc + e);
    let dev = (&sum - identity(dim)).norm();
    if dev > DECODE_COMPLETENESS_LIMIT {
        return Err(QsdError::IncompletePovm(dev));
    }
    let scale = inv_sqrt_pd(&sum, 0.5)?;
    let elements = elements.iter().map(|e| hermitize(&(&scale * e * &scale))).collect();
    Povm::new(elements, labels)
}

#[derive(Debug, Clone)]
pub struct SchemeSolution {
    pub povm: Povm,
    pub solution: Solution,
    /// Optimal value in the scheme's own sense.
    pub value: f64,
}

/// Compiles, solves, and decodes. Infeasible or unconverged solves are
/// errors.
pub fn solve_scheme(spec: &ProblemSpec, config: &SchemeConfig, settings: &SolverSettings) -> Result<SchemeSolution> {
    let compiled = compile(spec, config)?;
    let solution = solve(&compiled.program, settings)?;
    match solution.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(QsdError::Infeasible {
                iterations: solution.iterations,
                primal: solution.primal_residual,
            })
        }
        SolveStatus::MaxIters => {
            return Err(QsdError::Unconverged {
                iterations: solution.iterations,
                primal: solution.primal_residual,
                dual: solution.dual_residual.max(solution.gap),
            })
        }
    }
    let povm = decode_povm(&compiled, &solution)?;
    Ok(SchemeSolution {
        value: compiled.scheme_objective(&solution),
        povm,
        solution,
    })
}

/// Joint distribution of the noiseless optimal unambiguous measurement,
/// the default FitQSD / hybrid reference.
pub fn noiseless_uqsd_reference(spec: &ProblemSpec, settings: &SolverSettings) -> Result<JointDistribution> {
    let sol = solve_scheme(spec, &SchemeConfig::new(Scheme::Uqsd, 0.0), settings)?;
    joint_distribution(spec, &sol.povm, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, min_eigenvalue, trace_re};
    use crate::metrics::outcome_stats;
    use crate::states::{make_single_qubit_pair, PureState};

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    fn zero_plus() -> ProblemSpec {
        ProblemSpec::from_pure(&make_single_qubit_pair(), vec![0.5, 0.5]).unwrap()
    }

    fn orthogonal() -> ProblemSpec {
        let s = [PureState::basis(1, 0).unwrap(), PureState::basis(1, 1).unwrap()];
        ProblemSpec::from_pure(&s, vec![0.5, 0.5]).unwrap()
    }

    fn run(spec: &ProblemSpec, scheme: Scheme, lambda: f64) -> SchemeSolution {
        solve_scheme(spec, &SchemeConfig::new(scheme, lambda), &settings()).unwrap()
    }

    #[test]
    fn med_orthogonal_and_zero_plus() {
        assert!((run(&orthogonal(), Scheme::Med, 0.0).value - 1.0).abs() < 1e-7);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = run(&zero_plus(), Scheme::Med, 0.0).value;
        assert!((v - (1.0 + h) / 2.0).abs() < 1e-7, "{v}");
    }

    #[test]
    fn med_plus_matches_med_and_inconclusive_vanishes() {
        let spec = zero_plus();
        let med = run(&spec, Scheme::Med, 0.0).value;
        let plus = run(&spec, Scheme::MedPlus, 0.0);
        assert!((plus.value - med).abs() <= 2e-8 + 1e-7);
        assert!(trace_re(plus.povm.inconclusive().unwrap()) <= 1e-4);
        let orth = run(&orthogonal(), Scheme::MedPlus, 0.0);
        assert!((orth.value - 1.0).abs() < 1e-7);
        assert!(trace_re(orth.povm.inconclusive().unwrap()) < 1e-6);
    }

    #[test]
    fn uqsd_cases() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = run(&zero_plus(), Scheme::Uqsd, 0.0).value;
        assert!((v - (1.0 - h)).abs() < 1e-6, "{v}");
        assert!((run(&orthogonal(), Scheme::Uqsd, 0.0).value - 1.0).abs() < 1e-6);

        let psi = make_single_qubit_pair()[1].clone();
        let same = ProblemSpec::from_pure(&[psi.clone(), psi], vec![0.5, 0.5]).unwrap();
        let sol = run(&same, Scheme::Uqsd, 0.0);
        assert!(sol.value.abs() < 1e-6);
        // A full-rank shared state leaves no room for conclusive elements.
        let sol = run(&same, Scheme::Uqsd, 0.3);
        assert!(sol.value.abs() < 1e-9);
        assert!((sol.povm.inconclusive().unwrap() - identity(2)).norm() < 1e-9);
    }

    #[test]
    fn frio_limits() {
        let spec = zero_plus();
        let med = run(&spec, Scheme::Med, 0.0).value;
        let at_zero = run(
            &spec,
            Scheme::Frio {
                rate: 0.0,
                bound: FrioBound::AtLeast,
            },
            0.0,
        );
        assert!((at_zero.value - med).abs() < 1e-6);
        let at_one = run(
            &spec,
            Scheme::Frio {
                rate: 1.0,
                bound: FrioBound::AtLeast,
            },
            0.0,
        );
        assert!(at_one.value.abs() < 1e-6);
        assert!((at_one.povm.inconclusive().unwrap() - identity(2)).norm() < 1e-5);
        let capped = run(
            &spec,
            Scheme::Frio {
                rate: 0.0,
                bound: FrioBound::AtMost,
            },
            0.0,
        );
        assert!((capped.value - med).abs() < 1e-6);
        assert!(build_frio(&spec, 0.0, 1.5, FrioBound::AtLeast).is_err());
    }

    #[test]
    fn crossqsd_degenerate_equals_med() {
        let spec = zero_plus();
        let med = run(&spec, Scheme::Med, 0.05).value;
        let cross = run(
            &spec,
            Scheme::CrossQsd {
                alpha: vec![1.0, 1.0],
                beta: vec![1.0, 1.0],
            },
            0.05,
        );
        assert!((cross.value - med).abs() < 1e-5);
        assert!(build_crossqsd(&spec, 0.0, &[0.1], &[0.1, 0.1]).is_err());
        assert!(build_crossqsd(&spec, 0.0, &[0.1, 1.1], &[0.1, 0.1]).is_err());
    }

    #[test]
    fn crossqsd_confidences_hold() {
        let spec = zero_plus();
        let (alpha, beta) = (vec![0.05, 0.1], vec![0.02, 0.08]);
        let lambda = 0.02;
        let sol = run(
            &spec,
            Scheme::CrossQsd {
                alpha: alpha.clone(),
                beta: beta.clone(),
            },
            lambda,
        );
        let (given_state, given_outcome) = crate::metrics::confidences(&spec, &sol.povm, lambda).unwrap();
        for i in 0..2 {
            assert!(given_state[i] >= 1.0 - alpha[i] - 1e-5, "{given_state:?}");
            assert!(given_outcome[i] >= 1.0 - beta[i] - 1e-5, "{given_outcome:?}");
        }
    }

    #[test]
    fn fit_min_l1_recovers_achievable_reference() {
        let spec = zero_plus();
        let reference = noiseless_uqsd_reference(&spec, &settings()).unwrap();
        let sol = run(
            &spec,
            Scheme::FitMinLp {
                ell: 1,
                reference: reference.clone(),
            },
            0.0,
        );
        assert!(sol.value <= 1e-6, "{}", sol.value);
        let jd = joint_distribution(&spec, &sol.povm, 0.0).unwrap();
        assert!(crate::metrics::lp_distance(&jd, &reference, 1.0).unwrap() <= 1e-6);
    }

    #[test]
    fn fit_objective_matches_recomputation() {
        let spec = zero_plus();
        let reference = noiseless_uqsd_reference(&spec, &settings()).unwrap();
        for ell in [1u8, 2] {
            let sol = run(
                &spec,
                Scheme::FitMinLp {
                    ell,
                    reference: reference.clone(),
                },
                0.05,
            );
            let jd = joint_distribution(&spec, &sol.povm, 0.05).unwrap();
            let dist = crate::metrics::lp_distance(&jd, &reference, ell as f64).unwrap();
            let recomputed = dist.powi(ell as i32);
            assert!(sol.value >= 0.0);
            assert!(
                (sol.value - recomputed).abs() < 1e-6,
                "ell={ell}: {} vs {recomputed}",
                sol.value
            );
        }
    }

    #[test]
    fn meco_with_noiseless_reference() {
        let spec = zero_plus();
        let reference = noiseless_uqsd_reference(&spec, &settings()).unwrap();
        let uqsd = run(&spec, Scheme::Uqsd, 0.0).value;
        let sol = run(
            &spec,
            Scheme::FitMeco {
                reference: reference.clone(),
            },
            0.0,
        );
        assert!((sol.value - uqsd).abs() < 1e-6);
        let jd = joint_distribution(&spec, &sol.povm, 0.0).unwrap();
        for i in 0..2 {
            assert!((jd.get(i, i) - reference.get(i, i)).abs() < 1e-6);
        }
    }

    #[test]
    fn meco_zero_offdiagonal_reference_bounds_success() {
        let spec = zero_plus();
        let reference = noiseless_uqsd_reference(&spec, &settings()).unwrap();
        let sol = run(
            &spec,
            Scheme::FitMeco {
                reference: reference.clone(),
            },
            0.01,
        );
        let bound = reference.get(0, 0) + reference.get(1, 1);
        assert!(sol.value <= bound + 1e-7);
    }

    #[test]
    fn meco_infeasible_reference_is_reported() {
        // Off-diagonal lower bounds larger than any achievable mass.
        let spec = orthogonal();
        let reference = JointDistribution::from_rows(&[vec![0.0, 0.9, 0.0], vec![0.9, 0.0, 0.0]]).unwrap();
        let err = solve_scheme(
            &spec,
            &SchemeConfig::new(Scheme::FitMeco { reference }, 0.0),
            &settings(),
        );
        assert!(matches!(err, Err(QsdError::Infeasible { .. })), "{err:?}");
    }

    #[test]
    fn hybrid_zero_weight_is_med() {
        let spec = zero_plus();
        let reference = noiseless_uqsd_reference(&spec, &settings()).unwrap();
        let med = run(&spec, Scheme::Med, 0.01).value;
        let hybrid = run(
            &spec,
            Scheme::Hybrid {
                w: 0.0,
                ell: 1,
                reference,
            },
            0.01,
        );
        assert!((hybrid.value - med).abs() < 1e-5);
    }

    #[test]
    fn decode_exact_and_noisy_blocks() {
        let spec = orthogonal();
        let compiled = build_med(&spec, 0.0).unwrap();
        let p0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p1 = identity(2) - &p0;
        let mut x = svec(&p0);
        x.extend(svec(&p1));
        let exact = Solution {
            x,
            status: SolveStatus::Optimal,
            primal_residual: 0.0,
            dual_residual: 0.0,
            gap: 0.0,
            objective: -1.0,
            iterations: 1,
        };
        let povm = decode_povm(&compiled, &exact).unwrap();
        assert!((&povm.elements()[0] - &p0).norm() < 1e-12);
        assert!((&povm.elements()[1] - &p1).norm() < 1e-12);

        let mut noisy = exact.clone();
        let mut q0 = p0.clone();
        q0[(1, 1)] = c(-1e-9, 0.0);
        noisy.x = svec(&q0);
        noisy.x.extend(svec(&p1));
        let povm = decode_povm(&compiled, &noisy).unwrap();
        for e in povm.elements() {
            assert!(min_eigenvalue(e).unwrap() >= -1e-15);
        }
        assert!(povm.completeness_error() < 1e-10);

        let mut bad = exact.clone();
        bad.x = svec(&p0.scale(0.5));
        bad.x.extend(svec(&p1));
        assert!(matches!(decode_povm(&compiled, &bad), Err(QsdError::IncompletePovm(_))));
    }

    #[test]
    fn stats_of_decoded_med_are_consistent() {
        let spec = zero_plus();
        let sol = run(&spec, Scheme::Med, 0.0);
        let stats = outcome_stats(&joint_distribution(&spec, &sol.povm, 0.0).unwrap());
        assert!((stats.p_succ - sol.value).abs() < 1e-7);
        assert!((stats.p_succ + stats.p_err + stats.p_inc - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_single_state() {
        let spec = ProblemSpec::from_pure(&[PureState::basis(1, 0).unwrap()], vec![1.0]).unwrap();
        assert!(build_med(&spec, 0.0).is_err());
    }
}
