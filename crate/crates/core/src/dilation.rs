//! Minimal-ancilla Naimark dilation.
//!
//! Each POVM element is split into rank-1 terms `Π_i = Σ_j f̃_ij f̃_ij†`.
//! Term `(i, j)` is sent to the computational basis state with index
//! `Σ_{k<i} r_k + j`, giving the isometry `V = Σ |g_ij⟩⟨f̃_ij|` on
//! `m = max(n, ⌈log₂ ℓ⌉)` qubits, `ℓ = Σ r_i`. Measuring the target register
//! in the computational basis and grouping indices by element reproduces
//! the POVM. Target indices are ordered with the ancilla qubits most
//! significant, so an input state occupies the first `d` amplitudes.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{QsdError, Result};
use crate::linalg::{c, hermitian_eigh, identity, isometry_error, sqrt_psd, trace_product, trace_re, CMatrix, CVector};
use crate::povm::{Label, Povm};
use crate::random::random_density;
use crate::states::DensityMatrix;

pub const DEFAULT_RANK_TOL: f64 = 1e-7;

/// Outcome attached to a target basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Element(Label),
    /// Unused target indices plus any probability lost to truncation.
    Residual,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Element(label) => label.fmt(f),
            Outcome::Residual => f.write_str("residual"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Term {
    pub element: usize,
    pub within: usize,
    pub sigma: f64,
    /// `√σ · l` for the unit eigenvector `l`.
    pub vector: CVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Decomposition {
    pub dim: usize,
    pub labels: Vec<Label>,
    /// Grouped by element, `sigma` descending within each element.
    pub terms: Vec<Rank1Term>,
    pub per_element_rank: Vec<usize>,
}

impl Rank1Decomposition {
    pub fn total_rank(&self) -> usize {
        self.terms.len()
    }

    /// `Σ_j f̃_ij f̃_ij†` for element `i`.
    pub fn reconstruct(&self, element: usize) -> CMatrix {
        self.terms
            .iter()
            .filter(|t| t.element == element)
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, t| {
                acc + &t.vector * t.vector.adjoint()
            })
    }
}

/// Eigendecomposition of each element, keeping eigenvalues above `rank_tol`.
pub fn decompose_rank1(povm: &Povm, rank_tol: f64) -> Result<Rank1Decomposition> {
    if !(rank_tol >= 0.0) {
        return Err(QsdError::InvalidParameter(format!(
            "rank_tol = {rank_tol} must be nonnegative"
        )));
    }
    let mut terms = Vec::new();
    let mut per_element_rank = Vec::with_capacity(povm.len());
    for (i, element) in povm.elements().iter().enumerate() {
        let (values, vectors) = hermitian_eigh(element)?;
        let mut within = 0;
        for (idx, &sigma) in values.iter().enumerate().rev() {
            if sigma <= rank_tol {
                break;
            }
            terms.push(Rank1Term {
                element: i,
                within,
                sigma,
                vector: vectors.column(idx).scale(sigma.sqrt()),
            });
            within += 1;
        }
        per_element_rank.push(within);
    }
    Ok(Rank1Decomposition {
        dim: povm.dim(),
        labels: povm.labels().to_vec(),
        terms,
        per_element_rank,
    })
}

/// Drops terms with `σ < delta` without renormalizing.
pub fn truncate(dec: &Rank1Decomposition, delta: f64) -> Result<Rank1Decomposition> {
    if !(delta >= 0.0) {
        return Err(QsdError::InvalidParameter(format!(
            "delta = {delta} must be nonnegative"
        )));
    }
    let mut per_element_rank = vec![0; dec.labels.len()];
    let terms = dec
        .terms
        .iter()
        .filter(|t| t.sigma >= delta)
        .map(|t| {
            let within = per_element_rank[t.element];
            per_element_rank[t.element] += 1;
            Rank1Term { within, ..t.clone() }
        })
        .collect();
    Ok(Rank1Decomposition {
        dim: dec.dim,
        labels: dec.labels.clone(),
        terms,
        per_element_rank,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DilationResult {
    pub domain_dim: usize,
    /// Number of target indices carrying a POVM outcome.
    pub total_rank: usize,
    pub target_qubits: usize,
    /// `2^target_qubits × domain_dim`.
    pub isometry: CMatrix,
    /// One entry per target basis index.
    pub outcome_map: Vec<Outcome>,
    pub delta: f64,
}

impl DilationResult {
    pub fn domain_qubits(&self) -> usize {
        self.domain_dim.trailing_zeros() as usize
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.target_qubits - self.domain_qubits()
    }

    pub fn target_dim(&self) -> usize {
        1 << self.target_qubits
    }

    /// `max |V†V − I|`.
    pub fn isometry_error(&self) -> f64 {
        isometry_error(&self.isometry)
    }

    /// Distinct outcomes in first-appearance order, `Residual` last.
    pub fn outcomes(&self) -> Vec<Outcome> {
        let mut out: Vec<Outcome> = Vec::new();
        for o in &self.outcome_map {
            if *o != Outcome::Residual && !out.contains(o) {
                out.push(*o);
            }
        }
        out.push(Outcome::Residual);
        out
    }
}

fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

fn domain_qubits(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(QsdError::InvalidParameter(format!(
            "domain dimension {dim} is not a power of two ≥ 2"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Minimal dilation with computational-basis targets.
pub fn build_isometry(dec: &Rank1Decomposition) -> Result<DilationResult> {
    let ell = dec.total_rank();
    if ell == 0 {
        return Err(QsdError::InvalidParameter("decomposition has no terms".into()));
    }
    let n = domain_qubits(dec.dim)?;
    let m = n.max(ceil_log2(ell));
    let rows = 1usize << m;
    let mut v = CMatrix::zeros(rows, dec.dim);
    let mut outcome_map = vec![Outcome::Residual; rows];
    let mut offsets = vec![0; dec.labels.len()];
    for i in 1..offsets.len() {
        offsets[i] = offsets[i - 1] + dec.per_element_rank[i - 1];
    }
    for t in &dec.terms {
        let row = offsets[t.element] + t.within;
        v.row_mut(row).copy_from(&t.vector.adjoint());
        outcome_map[row] = Outcome::Element(dec.labels[t.element]);
    }
    Ok(DilationResult {
        domain_dim: dec.dim,
        total_rank: ell,
        target_qubits: m,
        isometry: v,
        outcome_map,
        delta: 0.0,
    })
}

/// Minimal dilation after truncating terms with `σ < delta`.
pub fn build_truncated_isometry(povm: &Povm, rank_tol: f64, delta: f64) -> Result<DilationResult> {
    let dec = truncate(&decompose_rank1(povm, rank_tol)?, delta)?;
    let mut dil = build_isometry(&dec)?;
    dil.delta = delta;
    Ok(dil)
}

/// Baseline `V = Σ_i √Π_i ⊗ |i⟩` on `k·d` indices (system index most
/// significant), zero-padded to a power of two.
pub fn build_isometry_generic(povm: &Povm) -> Result<DilationResult> {
    let d = povm.dim();
    domain_qubits(d)?;
    let k = povm.len();
    let used = k * d;
    let m = ceil_log2(used);
    let rows = 1usize << m;
    let mut v = CMatrix::zeros(rows, d);
    let mut outcome_map = vec![Outcome::Residual; rows];
    for (i, (label, element)) in povm.iter().enumerate() {
        let root = sqrt_psd(element)?;
        for sys in 0..d {
            let row = sys * k + i;
            v.row_mut(row).copy_from(&root.row(sys));
            outcome_map[row] = Outcome::Element(label);
        }
    }
    Ok(DilationResult {
        domain_dim: d,
        total_rank: used,
        target_qubits: m,
        isometry: v,
        outcome_map,
        delta: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeCounts {
    pub outcomes: Vec<Outcome>,
    pub probabilities: Vec<f64>,
    /// Empty when no shots were requested.
    pub counts: Vec<u64>,
    pub shots: u64,
    pub seed: u64,
}

impl OutcomeCounts {
    pub fn probability(&self, outcome: Outcome) -> f64 {
        self.outcomes
            .iter()
            .position(|o| *o == outcome)
            .map_or(0.0, |i| self.probabilities[i])
    }
}

/// Exact outcome probabilities `⟨b|VρV†|b⟩` grouped by outcome, plus
/// `shots` multinomial samples drawn with a ChaCha8 stream seeded by `seed`.
pub fn simulate_measurement(
    dil: &DilationResult,
    state: &DensityMatrix,
    shots: u64,
    seed: u64,
) -> Result<OutcomeCounts> {
    if state.dim() != dil.domain_dim {
        return Err(QsdError::DimensionMismatch {
            expected: dil.domain_dim,
            found: state.dim(),
        });
    }
    let outcomes = dil.outcomes();
    let mut probabilities = vec![0.0; outcomes.len()];
    let out_state = &dil.isometry * state.matrix() * dil.isometry.adjoint();
    let residual = outcomes.len() - 1;
    for (b, o) in dil.outcome_map.iter().enumerate() {
        let idx = outcomes.iter().position(|x| x == o).expect("outcome listed");
        probabilities[idx] += out_state[(b, b)].re;
    }
    probabilities[residual] += trace_re(state.matrix()) - trace_re(&out_state);
    for p in probabilities.iter_mut() {
        *p = p.clamp(0.0, 1.0);
    }
    let counts = if shots > 0 {
        sample_multinomial(&probabilities, shots, seed)?
    } else {
        Vec::new()
    };
    Ok(OutcomeCounts {
        outcomes,
        probabilities,
        counts,
        shots,
        seed,
    })
}

/// Sequential conditional binomials.
fn sample_multinomial(probabilities: &[f64], shots: u64, seed: u64) -> Result<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = shots;
    let mut mass: f64 = probabilities.iter().sum();
    let mut counts = Vec::with_capacity(probabilities.len());
    for (i, &p) in probabilities.iter().enumerate() {
        let last = i + 1 == probabilities.len();
        let n = if last || remaining == 0 {
            remaining
        } else if mass <= 0.0 {
            0
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| QsdError::InvalidParameter(format!("sampling: {e}")))?
                .sample(&mut rng)
        };
        counts.push(n);
        remaining -= n;
        mass -= p;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// `max |V†V − I|`.
    pub isometry_error: f64,
    /// Largest `|p_dilation(i) − Tr(ρΠ_i)|` over states and elements.
    pub max_probability_deviation: f64,
    /// Largest residual-outcome probability.
    pub max_residual: f64,
    pub states_checked: usize,
}

/// Checks the dilation against the POVM on the given states.
pub fn verify_dilation_on(dil: &DilationResult, povm: &Povm, states: &[DensityMatrix]) -> Result<VerificationReport> {
    if dil.domain_dim != povm.dim() {
        return Err(QsdError::DimensionMismatch {
            expected: povm.dim(),
            found: dil.domain_dim,
        });
    }
    let mut max_dev = 0.0_f64;
    let mut max_residual = 0.0_f64;
    for rho in states {
        let sim = simulate_measurement(dil, rho, 0, 0)?;
        for (label, element) in povm.iter() {
            let want = trace_product(rho.matrix(), element);
            max_dev = max_dev.max((sim.probability(Outcome::Element(label)) - want).abs());
        }
        max_residual = max_residual.max(sim.probability(Outcome::Residual));
    }
    Ok(VerificationReport {
        isometry_error: dil.isometry_error(),
        max_probability_deviation: max_dev,
        max_residual,
        states_checked: states.len(),
    })
}

/// Checks the dilation on `count` random states of random rank.
pub fn verify_dilation(dil: &DilationResult, povm: &Povm, count: usize, seed: u64) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = povm.dim();
    let states = (0..count)
        .map(|s| random_density(&mut rng, d, 1 + s % d))
        .collect::<Result<Vec<_>>>()?;
    verify_dilation_on(dil, povm, &states)
}

const EXACT_ISOMETRY_TOL: f64 = 1e-10;

/// Unitary whose first `d` columns are `V`. A truncated `V` is replaced by
/// its polar factor first; directions lost entirely are filled in during
/// completion.
pub fn complete_to_unitary(dil: &DilationResult) -> Result<CMatrix> {
    let n = dil.target_dim();
    let d = dil.domain_dim;
    let v = &dil.isometry;
    let cols: Vec<CVector> = if isometry_error(v) <= EXACT_ISOMETRY_TOL {
        v.column_iter().map(|c| c.into_owned()).collect()
    } else {
        let svd = v.clone().svd(true, true);
        let polar = svd.u.expect("requested") * svd.v_t.expect("requested");
        orthonormalize(&polar)
    };
    complete_columns(cols, n, d)
}

/// Gram-Schmidt over the columns; dependent columns come back as zero.
fn orthonormalize(m: &CMatrix) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::with_capacity(m.ncols());
    for col in m.column_iter() {
        let mut w = col.into_owned();
        for _ in 0..2 {
            for q in out.iter().filter(|q| q.norm() > 0.5) {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let norm = w.norm();
        out.push(if norm > 1e-8 {
            w.unscale(norm)
        } else {
            CVector::zeros(m.nrows())
        });
    }
    out
}

/// Fills zero columns among the first `d` and appends `n − d` further
/// columns orthonormal to everything so far.
fn complete_columns(mut cols: Vec<CVector>, n: usize, d: usize) -> Result<CMatrix> {
    let mut basis: Vec<CVector> = cols.iter().filter(|c| c.norm() > 0.5).cloned().collect();
    let mut candidates = (0..n).map(|b| {
        let mut e = CVector::zeros(n);
        e[b] = c(1.0, 0.0);
        e
    });
    let mut next_orthogonal = |basis: &mut Vec<CVector>| -> Result<CVector> {
        for e in candidates.by_ref() {
            let mut w = e;
            for _ in 0..2 {
                for q in basis.iter() {
                    let proj = q.dotc(&w);
                    w -= q * proj;
                }
            }
            let norm = w.norm();
            if norm > 1e-6 {
                let w = w.unscale(norm);
                basis.push(w.clone());
                return Ok(w);
            }
        }
        Err(QsdError::InvalidParameter(
            "orthonormal completion ran out of candidates".into(),
        ))
    };
    for col in cols.iter_mut().take(d) {
        if col.norm() <= 0.5 {
            *col = next_orthogonal(&mut basis)?;
        }
    }
    while cols.len() < n {
        cols.push(next_orthogonal(&mut basis)?);
    }
    Ok(CMatrix::from_columns(&cols))
}

/// `‖U†U − I‖_max`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    (g - identity(u.nrows())).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
