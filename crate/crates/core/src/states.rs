//! Quantum states, the depolarizing channel, discrimination instances, and
//! the benchmark state families.
//!
//! Amplitude index `n` is the integer value of the computational-basis
//! bitstring with the most significant qubit first, so `|01⟩` is index 1
//! and `|10⟩` is index 2.

use crate::error::{QsdError, Result};
use crate::linalg::{
    c, hermiticity_error, hermitize, identity, min_eigenvalue, outer, trace_re, CMatrix, CVector, Complex64,
};

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-9;
const PRIOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: CVector,
}

impl PureState {
    /// Validates length `2^num_qubits` and unit norm within 1e-12.
    pub fn new(num_qubits: usize, amplitudes: CVector) -> Result<Self> {
        if num_qubits == 0 {
            return Err(QsdError::InvalidState("num_qubits must be at least 1".into()));
        }
        let dim = 1usize << num_qubits;
        if amplitudes.len() != dim {
            return Err(QsdError::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(QsdError::InvalidState(format!(
                "amplitudes have squared norm {norm_sq}, expected 1"
            )));
        }
        Ok(Self { num_qubits, amplitudes })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(num_qubits: usize, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QsdError::InvalidState("zero or non-finite amplitude vector".into()));
        }
        Self::new(num_qubits, amplitudes.unscale(norm))
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QsdError::InvalidState(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = c(1.0, 0.0);
        Self::new(num_qubits, amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: hermitize(&outer(&self.amplitudes, &self.amplitudes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity (1e-12), unit trace (1e-10), and PSD (min
    /// eigenvalue ≥ -1e-9).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(QsdError::InvalidState(
                "density matrix must be square and non-empty".into(),
            ));
        }
        let herm = hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(QsdError::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = trace_re(&matrix);
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(QsdError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let lo = min_eigenvalue(&matrix)?;
        if lo < PSD_TOL {
            return Err(QsdError::InvalidState(format!("not PSD (min eigenvalue {lo:.3e})")));
        }
        Ok(Self {
            matrix: hermitize(&matrix),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(psi: &PureState) -> Self {
        psi.density()
    }
}

/// Outer product `|ψ⟩⟨ψ|`.
pub fn density_of(psi: &PureState) -> DensityMatrix {
    psi.density()
}

/// `E_λ(ρ) = (1 - λ) ρ + λ I / d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepolarizingChannel {
    lambda: f64,
    dim: usize,
}

impl DepolarizingChannel {
    pub fn new(lambda: f64, dim: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(QsdError::InvalidParameter(format!(
                "depolarizing level {lambda} outside [0, 1]"
            )));
        }
        Ok(Self { lambda, dim })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim {
            return Err(QsdError::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let mut out = rho.matrix.scale(1.0 - self.lambda);
        let shift = self.lambda / self.dim as f64;
        for i in 0..self.dim {
            out[(i, i)] += c(shift, 0.0);
        }
        Ok(DensityMatrix { matrix: out })
    }
}

pub fn apply_depolarizing(channel: &DepolarizingChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    channel.apply(rho)
}

/// A discrimination instance: `k` states of a common dimension, their
/// priors, and the noise level applied by default when evaluating.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    dim: usize,
    states: Vec<DensityMatrix>,
    priors: Vec<f64>,
    noise_lambda: f64,
}

impl ProblemSpec {
    pub fn new(states: Vec<DensityMatrix>, priors: Vec<f64>, noise_lambda: f64) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(QsdError::InvalidProblem("at least one state is required".into()));
        };
        let dim = first.dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
            return Err(QsdError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        if priors.len() != states.len() {
            return Err(QsdError::InvalidProblem(format!(
                "{} priors for {} states",
                priors.len(),
                states.len()
            )));
        }
        if priors.iter().any(|&p| !(p >= 0.0)) {
            return Err(QsdError::InvalidProblem("priors must be nonnegative".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > PRIOR_TOL {
            return Err(QsdError::InvalidProblem(format!("priors sum to {total}, expected 1")));
        }
        if !(0.0..=1.0).contains(&noise_lambda) {
            return Err(QsdError::InvalidParameter(format!(
                "noise level {noise_lambda} outside [0, 1]"
            )));
        }
        Ok(Self {
            dim,
            states,
            priors,
            noise_lambda,
        })
    }

    /// Equal priors `1/k`, noiseless.
    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let k = states.len().max(1);
        Self::new(states, vec![1.0 / k as f64; k], 0.0)
    }

    pub fn from_pure(states: &[PureState], priors: Vec<f64>) -> Result<Self> {
        Self::new(states.iter().map(PureState::density).collect(), priors, 0.0)
    }

    pub fn with_noise(mut self, noise_lambda: f64) -> Result<Self> {
        DepolarizingChannel::new(noise_lambda, self.dim)?;
        self.noise_lambda = noise_lambda;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn noise_lambda(&self) -> f64 {
        self.noise_lambda
    }

    /// States after `E_λ`.
    pub fn noisy_states(&self, lambda: f64) -> Result<Vec<DensityMatrix>> {
        let channel = DepolarizingChannel::new(lambda, self.dim)?;
        self.states.iter().map(|s| channel.apply(s)).collect()
    }
}

/// Fock-basis coherent state `|α⟩` truncated to the first `2^num_qubits`
/// levels and renormalized. Amplitudes follow `c_n = c_{n-1} α / √n`, which
/// is `α^n / √(n!)` without forming factorials.
pub fn make_coherent_state(alpha: Complex64, num_qubits: usize) -> Result<PureState> {
    if num_qubits == 0 || num_qubits > 20 {
        return Err(QsdError::InvalidParameter(format!(
            "coherent state truncation needs 1..=20 qubits, got {num_qubits}"
        )));
    }
    let dim = 1usize << num_qubits;
    let mut amps = CVector::zeros(dim);
    let mut term = c(1.0, 0.0);
    amps[0] = term;
    for n in 1..dim {
        term = term * alpha / (n as f64).sqrt();
        amps[n] = term;
    }
    PureState::normalized(num_qubits, amps)
}

/// `|ψ_i⟩ = (|b_{i-1}⟩ + a_i |11⟩) / √(1 + a_i²)` for `i = 1, 2, 3`, with
/// `b_0 = |00⟩`, `b_1 = |01⟩`, `b_2 = |10⟩`.
pub fn make_benchmark_two_qubit_states(a: [f64; 3]) -> Vec<PureState> {
    a.iter()
        .enumerate()
        .map(|(i, &ai)| {
            let mut amps = CVector::zeros(4);
            amps[i] = c(1.0, 0.0);
            amps[3] += c(ai, 0.0);
            PureState::normalized(2, amps).expect("benchmark state is normalizable")
        })
        .collect()
}

/// `[|0⟩, |+⟩]`.
pub fn make_single_qubit_pair() -> Vec<PureState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        PureState::basis(1, 0).expect("qubit basis state"),
        PureState::new(1, CVector::from_vec(vec![c(h, 0.0), c(h, 0.0)])).expect("plus state"),
    ]
}

/// The three truncated coherent states used throughout the examples:
/// amplitudes `1, e^{iφ}, e^{2iφ}` for the given phase step `φ`.
pub fn make_coherent_triple(phase_step: f64, num_qubits: usize) -> Result<Vec<PureState>> {
    (0..3)
        .map(|j| make_coherent_state(Complex64::from_polar(1.0, phase_step * j as f64), num_qubits))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
        let g = CMatrix::from_fn(dim, dim, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &g * g.adjoint();
        let tr = trace_re(&m);
        DensityMatrix::new(hermitize(&m.unscale(tr))).unwrap()
    }

    #[test]
    fn depolarizing_identity_and_full() {
        let rho = make_single_qubit_pair()[1].density();
        let out = DepolarizingChannel::new(0.0, 2).unwrap().apply(&rho).unwrap();
        assert_eq!(out, rho);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho8 = random_density(&mut rng, 8);
        let full = DepolarizingChannel::new(1.0, 8).unwrap().apply(&rho8).unwrap();
        assert!((full.matrix() - identity(8).unscale(8.0)).norm() < 1e-15);
    }

    #[test]
    fn depolarizing_half_on_ground_state() {
        let rho = PureState::basis(1, 0).unwrap().density();
        let out = DepolarizingChannel::new(0.5, 2).unwrap().apply(&rho).unwrap();
        assert_eq!(out.matrix()[(0, 0)], c(0.75, 0.0));
        assert_eq!(out.matrix()[(1, 1)], c(0.25, 0.0));
        assert_eq!(out.matrix()[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn depolarizing_rejects_dimension_mismatch() {
        let rho = PureState::basis(1, 0).unwrap().density();
        let err = DepolarizingChannel::new(0.1, 4).unwrap().apply(&rho).unwrap_err();
        assert!(matches!(err, QsdError::DimensionMismatch { expected: 4, found: 2 }));
        assert!(DepolarizingChannel::new(1.5, 2).is_err());
    }

    #[test]
    fn depolarizing_keeps_valid_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 0..100 {
            let dim = 1 << (1 + t % 3);
            let rho = random_density(&mut rng, dim);
            let lambda = rng.random::<f64>();
            let out = DepolarizingChannel::new(lambda, dim).unwrap().apply(&rho).unwrap();
            assert!(hermiticity_error(out.matrix()) <= 1e-12);
            assert!((trace_re(out.matrix()) - 1.0).abs() <= 1e-12);
            assert!(min_eigenvalue(out.matrix()).unwrap() >= -1e-12);
            DensityMatrix::new(out.into_matrix()).unwrap();
        }
    }

    #[test]
    fn coherent_vacuum() {
        let psi = make_coherent_state(c(0.0, 0.0), 3).unwrap();
        assert_eq!(psi.amplitudes()[0], c(1.0, 0.0));
        assert!(psi.amplitudes().iter().skip(1).all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_alpha_one_two_qubits() {
        // Series terms 1, 1, 1/√2, 1/√6, summed independently for the norm.
        let raw = [1.0, 1.0, 1.0 / 2f64.sqrt(), 1.0 / 6f64.sqrt()];
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let psi = make_coherent_state(c(1.0, 0.0), 2).unwrap();
        for (n, r) in raw.iter().enumerate() {
            assert!((psi.amplitudes()[n] - c(r / norm, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn coherent_overlap_matches_direct_inner_product() {
        let a = make_coherent_state(c(1.0, 0.0), 3).unwrap();
        let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let b = make_coherent_state(phase, 3).unwrap();
        // Direct summation over the series terms of both vectors.
        let mut ta = vec![c(1.0, 0.0)];
        let mut tb = vec![c(1.0, 0.0)];
        let mut fact = 1.0;
        for n in 1..8 {
            fact *= n as f64;
            ta.push(c(1.0, 0.0) / fact.sqrt());
            tb.push(phase.powu(n as u32) / fact.sqrt());
        }
        let na: f64 = ta.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = tb.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let direct: Complex64 = ta.iter().zip(&tb).map(|(x, y)| x.conj() * y).sum::<Complex64>() / (na * nb);
        assert!((a.inner(&b) - direct).norm() < 1e-14);
    }

    #[test]
    fn coherent_norm_is_unit() {
        for n in 1..=6 {
            for &(r, th) in &[(0.3, 0.0), (1.0, 1.0), (2.5, -2.0), (4.0, 0.7)] {
                let psi = make_coherent_state(Complex64::from_polar(r, th), n).unwrap();
                assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn benchmark_states() {
        let basis = make_benchmark_two_qubit_states([0.0, 0.0, 0.0]);
        for (i, psi) in basis.iter().enumerate() {
            assert_eq!(psi, &PureState::basis(2, i).unwrap());
        }
        let s = make_benchmark_two_qubit_states([0.2, 0.5, 0.7]);
        let expected = 0.2 * 0.5 / (1.04f64 * 1.25).sqrt();
        assert!((s[0].inner(&s[1]) - c(expected, 0.0)).norm() < 1e-15);
        for psi in &s {
            assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_qubit_pair() {
        let pair = make_single_qubit_pair();
        assert_eq!(pair.len(), 2);
        assert!((pair[0].inner(&pair[1]).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        for psi in &pair {
            assert!((trace_re(psi.density().matrix()) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn density_of_is_rank_one_projector() {
        let rho0 = density_of(&PureState::basis(1, 0).unwrap());
        assert_eq!(rho0.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(rho0.matrix()[(1, 1)], c(0.0, 0.0));
        let plus = density_of(&make_single_qubit_pair()[1]);
        assert!(plus.matrix().iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-15));

        let psi = make_coherent_state(c(0.7, -0.4), 3).unwrap();
        let rho = density_of(&psi);
        assert!((trace_re(rho.matrix()) - 1.0).abs() < 1e-12);
        assert!((rho.matrix() * rho.matrix() - rho.matrix()).norm() < 1e-12);
        let (vals, _) = hermitian_eigh(rho.matrix()).unwrap();
        assert!(vals[..7].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn problem_spec_validation() {
        let pair = make_single_qubit_pair();
        assert!(ProblemSpec::from_pure(&pair, vec![0.5, 0.5]).is_ok());
        assert!(ProblemSpec::from_pure(&pair, vec![0.6, 0.5]).is_err());
        assert!(ProblemSpec::from_pure(&pair, vec![1.2, -0.2]).is_err());
        let mixed = vec![
            pair[0].density(),
            make_benchmark_two_qubit_states([0.0; 3])[0].density(),
        ];
        assert!(matches!(
            ProblemSpec::uniform(mixed),
            Err(QsdError::DimensionMismatch { .. })
        ));
    }
}
