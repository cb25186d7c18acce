//! Seeded random states, POVMs, and discrimination instances.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{c, hermitize, inv_sqrt_pd, CMatrix, CVector};
use crate::povm::Povm;
use crate::states::{DensityMatrix, ProblemSpec, PureState};

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    })
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, num_qubits: usize) -> Result<PureState> {
    let dim = 1usize << num_qubits;
    let v: CVector = gaussian_matrix(rng, dim, 1).column(0).into_owned();
    PureState::normalized(num_qubits, v)
}

/// `G G† / Tr(G G†)` with `G` a `dim × rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<DensityMatrix> {
    let g = gaussian_matrix(rng, dim, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(hermitize(&m.unscale(tr)))
}

/// Random conclusive POVM with `k` elements of random rank, normalized as
/// `S^{-1/2} A_i S^{-1/2}`. The last rank is raised if needed so the ranks
/// cover `dim` and `S` is invertible.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, k: usize) -> Result<Povm> {
    let mut ranks: Vec<usize> = (0..k).map(|_| rng.random_range(1..=dim)).collect();
    let covered: usize = ranks[..k.saturating_sub(1)].iter().sum();
    if let Some(last) = ranks.last_mut() {
        *last = (*last).max(dim.saturating_sub(covered));
    }
    let raw: Vec<CMatrix> = ranks
        .into_iter()
        .map(|rank| {
            let g = gaussian_matrix(rng, dim, rank);
            &g * g.adjoint()
        })
        .collect();
    let sum = raw.iter().fold(CMatrix::zeros(dim, dim), |acc, a| acc + a);
    let s = inv_sqrt_pd(&sum, 0.0)?;
    Povm::conclusive(raw.iter().map(|a| hermitize(&(&s * a * &s))).collect())
}

/// Random discrimination instance with `k ∈ [2, max_k]` states on up to
/// `max_qubits` qubits and random priors. States are a mix of pure and
/// mixed ones; the first state is always full rank.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_k: usize, max_qubits: usize) -> Result<ProblemSpec> {
    let k = rng.random_range(2..=max_k.max(2));
    let n = rng.random_range(1..=max_qubits.max(1));
    let dim = 1usize << n;
    let mut states = vec![random_density(rng, dim, dim)?];
    for _ in 1..k {
        let state = if rng.random_bool(0.5) {
            random_pure_state(rng, n)?.density()
        } else {
            let rank = rng.random_range(1..=dim);
            random_density(rng, dim, rank)?
        };
        states.push(state);
    }
    let weights: Vec<f64> = (0..k).map(|_| 0.2 + rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut priors: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = priors[..k - 1].iter().sum();
    priors[k - 1] = 1.0 - head;
    ProblemSpec::new(states, priors, 0.0)
}
