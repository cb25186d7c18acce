//! Probability accounting for a measurement applied to a noisy ensemble.
//!
//! `P_err` counts conclusive misidentifications only; inconclusive mass is
//! reported separately as `P_inc`.

use nalgebra::DMatrix;

use crate::error::{QsdError, Result};
use crate::linalg::trace_product;
use crate::povm::{Label, Povm};
use crate::states::ProblemSpec;

/// `entries[(i, j)] = p_i Tr(E_λ(ρ_i) Π_j)` for `j < k`; column `k` holds the
/// inconclusive outcome (zero when the POVM has none).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    entries: DMatrix<f64>,
}

impl JointDistribution {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let k = entries.nrows();
        if k == 0 || entries.ncols() != k + 1 {
            return Err(QsdError::InvalidParameter(format!(
                "joint distribution must be k x (k+1), got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(QsdError::InvalidParameter("non-finite joint probability".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k + 1) {
            return Err(QsdError::InvalidParameter("every row needs k+1 entries".into()));
        }
        Self::new(DMatrix::from_fn(k, k + 1, |i, j| rows[i][j]))
    }

    /// Entries ≥ -1e-10 and total mass 1 within 1e-8.
    pub fn check(&self) -> Result<()> {
        if let Some(v) = self.entries.iter().find(|&&v| v < -1e-10) {
            return Err(QsdError::InvalidParameter(format!(
                "negative joint probability {v:.3e}"
            )));
        }
        let total = self.total();
        if (total - 1.0).abs() > 1e-8 {
            return Err(QsdError::InvalidParameter(format!(
                "joint distribution sums to {total}"
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, state: usize, outcome: usize) -> f64 {
        self.entries[(state, outcome)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// `p(Π_j | ρ_i) = entries[i][j] / p_i`.
    pub fn conditional(&self, priors: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.k(), self.k() + 1, |i, j| {
            if priors[i] > 0.0 {
                self.entries[(i, j)] / priors[i]
            } else {
                0.0
            }
        })
    }
}

fn column_of(label: Label, k: usize) -> usize {
    match label {
        Label::Conclusive(i) => i,
        Label::Inconclusive => k,
    }
}

fn check_shapes(spec: &ProblemSpec, povm: &Povm) -> Result<()> {
    if povm.dim() != spec.dim() {
        return Err(QsdError::DimensionMismatch {
            expected: spec.dim(),
            found: povm.dim(),
        });
    }
    if povm.num_conclusive() != spec.num_states() {
        return Err(QsdError::InvalidPovm(format!(
            "POVM has {} conclusive elements for {} states",
            povm.num_conclusive(),
            spec.num_states()
        )));
    }
    Ok(())
}

pub fn joint_distribution(spec: &ProblemSpec, povm: &Povm, lambda: f64) -> Result<JointDistribution> {
    check_shapes(spec, povm)?;
    let k = spec.num_states();
    let noisy = spec.noisy_states(lambda)?;
    let mut entries = DMatrix::zeros(k, k + 1);
    for (i, (rho, &p)) in noisy.iter().zip(spec.priors()).enumerate() {
        for (label, elem) in povm.iter() {
            entries[(i, column_of(label, k))] = p * trace_product(rho.matrix(), elem);
        }
    }
    JointDistribution::new(entries)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeStats {
    pub p_succ: f64,
    pub p_err: f64,
    pub p_inc: f64,
}

impl OutcomeStats {
    /// `P_err / P_succ`, or `+∞` when `P_succ ≤ 1e-15`.
    pub fn error_to_success(&self) -> f64 {
        if self.p_succ <= 1e-15 {
            f64::INFINITY
        } else {
            self.p_err / self.p_succ
        }
    }
}

pub fn outcome_stats(jd: &JointDistribution) -> OutcomeStats {
    let k = jd.k();
    let mut stats = OutcomeStats {
        p_succ: 0.0,
        p_err: 0.0,
        p_inc: 0.0,
    };
    for i in 0..k {
        for j in 0..k {
            if i == j {
                stats.p_succ += jd.get(i, j);
            } else {
                stats.p_err += jd.get(i, j);
            }
        }
        stats.p_inc += jd.get(i, k);
    }
    stats
}

pub fn error_to_success(jd: &JointDistribution) -> f64 {
    outcome_stats(jd).error_to_success()
}

/// `(Σ |a - b|^ℓ)^{1/ℓ}` over all `k×(k+1)` entries, `ℓ ∈ {1, 2}`.
pub fn lp_distance(a: &JointDistribution, b: &JointDistribution, ell: f64) -> Result<f64> {
    if a.entries.shape() != b.entries.shape() {
        return Err(QsdError::InvalidParameter(format!(
            "shape mismatch {:?} vs {:?}",
            a.entries.shape(),
            b.entries.shape()
        )));
    }
    if ell != 1.0 && ell != 2.0 {
        return Err(QsdError::InvalidParameter(format!("unsupported norm order {ell}")));
    }
    let sum: f64 = a
        .entries
        .iter()
        .zip(b.entries.iter())
        .map(|(x, y)| (x - y).abs().powf(ell))
        .sum();
    Ok(sum.powf(1.0 / ell))
}

/// Per-state confidences `(p(Π_i|ρ_i), p(ρ_i|Π_i))`, both conditioned on a
/// conclusive outcome. Ratios with denominator ≤ 1e-12 are reported as 1.
pub fn confidences(spec: &ProblemSpec, povm: &Povm, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let jd = joint_distribution(spec, povm, lambda)?;
    let k = jd.k();
    let ratio = |num: f64, den: f64| if den <= 1e-12 { 1.0 } else { num / den };
    let given_state = (0..k)
        .map(|i| ratio(jd.get(i, i), (0..k).map(|j| jd.get(i, j)).sum()))
        .collect();
    let given_outcome = (0..k)
        .map(|i| ratio(jd.get(i, i), (0..k).map(|j| jd.get(j, i)).sum()))
        .collect();
    Ok((given_state, given_outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity, CMatrix};
    use crate::states::{DensityMatrix, PureState};
    use proptest::prelude::*;

    fn proj(i: usize, dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, i)] = c(1.0, 0.0);
        m
    }

    fn basis_spec(k: usize, dim: usize, priors: Vec<f64>) -> ProblemSpec {
        let states = (0..k)
            .map(|i| PureState::basis(dim.trailing_zeros() as usize, i).unwrap().density())
            .collect();
        ProblemSpec::new(states, priors, 0.0).unwrap()
    }

    #[test]
    fn orthogonal_states_with_matching_pvm() {
        let spec = basis_spec(2, 2, vec![0.3, 0.7]);
        let povm = Povm::conclusive(vec![proj(0, 2), proj(1, 2)]).unwrap();
        let jd = joint_distribution(&spec, &povm, 0.0).unwrap();
        assert_eq!(jd.rows(), vec![vec![0.3, 0.0, 0.0], vec![0.0, 0.7, 0.0]]);
        let stats = outcome_stats(&jd);
        assert_eq!((stats.p_succ, stats.p_err, stats.p_inc), (1.0, 0.0, 0.0));
        let (a, b) = confidences(&spec, &povm, 0.0).unwrap();
        assert_eq!(a, vec![1.0, 1.0]);
        assert_eq!(b, vec![1.0, 1.0]);
    }

    #[test]
    fn fully_depolarized_rows_identical() {
        let spec = basis_spec(3, 8, vec![1.0 / 3.0; 3]);
        let povm = Povm::conclusive(vec![
            proj(0, 8) + proj(3, 8),
            proj(1, 8) + proj(4, 8) + proj(5, 8),
            proj(2, 8) + proj(6, 8) + proj(7, 8),
        ])
        .unwrap();
        let jd = joint_distribution(&spec, &povm, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                assert!((jd.get(i, j) - jd.get(0, j)).abs() < 1e-15);
            }
            let row: f64 = (0..4).map(|j| jd.get(i, j)).sum();
            assert!((row - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((error_to_success(&jd) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_guessing_confidence() {
        let pair = crate::states::make_single_qubit_pair();
        let spec = ProblemSpec::from_pure(&pair, vec![0.5, 0.5]).unwrap();
        let half = identity(2).scale(0.5);
        let povm = Povm::conclusive(vec![half.clone(), half]).unwrap();
        let (_, given_outcome) = confidences(&spec, &povm, 0.0).unwrap();
        assert!(given_outcome.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn inconclusive_column_and_padding() {
        let spec = ProblemSpec::uniform(vec![DensityMatrix::maximally_mixed(2); 2]).unwrap();
        let povm = Povm::new(
            vec![CMatrix::zeros(2, 2), CMatrix::zeros(2, 2), identity(2)],
            vec![Label::Conclusive(0), Label::Conclusive(1), Label::Inconclusive],
        )
        .unwrap();
        let jd = joint_distribution(&spec, &povm, 0.0).unwrap();
        let stats = outcome_stats(&jd);
        assert_eq!(stats.p_inc, 1.0);
        assert_eq!(stats.error_to_success(), f64::INFINITY);
        let (a, b) = confidences(&spec, &povm, 0.0).unwrap();
        assert_eq!((a, b), (vec![1.0, 1.0], vec![1.0, 1.0]));
    }

    #[test]
    fn distance_basics() {
        let a = JointDistribution::from_rows(&[vec![0.5, 0.0, 0.0], vec![0.0, 0.5, 0.0]]).unwrap();
        assert_eq!(lp_distance(&a, &a, 1.0).unwrap(), 0.0);
        let b = JointDistribution::from_rows(&[vec![0.5, 0.0, 0.0], vec![0.0, 0.4, 0.1]]).unwrap();
        let single = JointDistribution::from_rows(&[vec![0.5, 0.0, 0.0], vec![0.0, 0.5, 0.25]]).unwrap();
        assert!((lp_distance(&a, &single, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((lp_distance(&a, &single, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((lp_distance(&a, &b, 2.0).unwrap() - 0.02f64.sqrt()).abs() < 1e-15);
        assert!(lp_distance(&a, &b, 3.0).is_err());
        let small = JointDistribution::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(lp_distance(&a, &small, 1.0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let spec = basis_spec(2, 4, vec![0.5, 0.5]);
        let povm = Povm::conclusive(vec![proj(0, 2), proj(1, 2)]).unwrap();
        assert!(matches!(
            joint_distribution(&spec, &povm, 0.0),
            Err(QsdError::DimensionMismatch { .. })
        ));
    }

    fn jd_strategy() -> impl Strategy<Value = JointDistribution> {
        proptest::collection::vec(0.0f64..1.0, 6)
            .prop_map(|v| JointDistribution::new(DMatrix::from_row_slice(2, 3, &v)).unwrap())
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in jd_strategy(), b in jd_strategy(), m in jd_strategy()) {
            for ell in [1.0, 2.0] {
                let ab = lp_distance(&a, &b, ell).unwrap();
                let am = lp_distance(&a, &m, ell).unwrap();
                let mb = lp_distance(&m, &b, ell).unwrap();
                prop_assert!(ab <= am + mb + 1e-12);
            }
        }

        #[test]
        fn stats_account_for_total_mass(a in jd_strategy()) {
            let s = outcome_stats(&a);
            prop_assert!((s.p_succ + s.p_err + s.p_inc - a.total()).abs() <= 1e-10);
        }
    }
}
