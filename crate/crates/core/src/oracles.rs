//! Independent reference values for small instances. Nothing here calls the
//! conic solver.

use crate::error::{QsdError, Result};
use crate::linalg::{hermitian_eigh, CMatrix};
use crate::schemes::{FrioBound, Scheme, SchemeConfig};
use crate::states::{DensityMatrix, ProblemSpec, PureState};

/// Helstrom bound `½(1 + ‖p₁ρ₁ − p₂ρ₂‖₁)`.
pub fn helstrom_two_state(rho1: &DensityMatrix, rho2: &DensityMatrix, p1: f64) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(QsdError::DimensionMismatch {
            expected: rho1.dim(),
            found: rho2.dim(),
        });
    }
    check_prior(p1)?;
    let diff = rho1.matrix().scale(p1) - rho2.matrix().scale(1.0 - p1);
    let (values, _) = hermitian_eigh(&diff)?;
    let trace_norm: f64 = values.iter().map(|v| v.abs()).sum();
    Ok(0.5 * (1.0 + trace_norm))
}

/// Optimal unambiguous success probability for two pure states.
///
/// Any unambiguous measurement fails on `ψ_i` with conditional probability
/// `q_i`, and the attainable pairs are `q₁q₂ ≥ s²`, `q_i ∈ [s², 1]` with
/// `s = |⟨ψ₁|ψ₂⟩|`. Along the boundary `q₂ = s²/q₁` the failure rate
/// `p₁q₁ + p₂s²/q₁` is convex in `q₁`, so its minimizer is the stationary
/// point `s√(p₂/p₁)` clamped to `[s², 1]`. Equal priors give `1 − s`.
pub fn uqsd_two_pure(psi1: &PureState, psi2: &PureState, p1: f64) -> Result<f64> {
    if psi1.dim() != psi2.dim() {
        return Err(QsdError::DimensionMismatch {
            expected: psi1.dim(),
            found: psi2.dim(),
        });
    }
    check_prior(p1)?;
    let p2 = 1.0 - p1;
    let s = psi1.inner(psi2).norm().min(1.0);
    if s == 0.0 {
        return Ok(1.0);
    }
    let s2 = s * s;
    let q1 = if p1 == 0.0 {
        1.0
    } else {
        (s * (p2 / p1).sqrt()).clamp(s2, 1.0)
    };
    let q2 = s2 / q1;
    Ok((1.0 - p1 * q1 - p2 * q2).max(0.0))
}

fn check_prior(p1: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p1) {
        Ok(())
    } else {
        Err(QsdError::InvalidParameter(format!("prior {p1} outside [0, 1]")))
    }
}

fn bloch_vector(rho: &CMatrix) -> [f64; 3] {
    let x = 2.0 * rho[(0, 1)].re;
    let y = -2.0 * rho[(0, 1)].im;
    let z = (rho[(0, 0)] - rho[(1, 1)]).re;
    [x, y, z]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize3(a: [f64; 3]) -> Option<[f64; 3]> {
    let n = dot3(&a, &a).sqrt();
    (n > 1e-12).then(|| [a[0] / n, a[1] / n, a[2] / n])
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal pair spanning a great circle through both Bloch vectors.
fn spanning_plane(r1: &[f64; 3], r2: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let e1 = normalize3(*r1).or_else(|| normalize3(*r2)).unwrap_or([0.0, 0.0, 1.0]);
    let along = dot3(r2, &e1);
    let perp = [r2[0] - along * e1[0], r2[1] - along * e1[1], r2[2] - along * e1[2]];
    let e2 = normalize3(perp).unwrap_or_else(|| {
        let helper = if e1[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        normalize3(cross3(&e1, &helper)).expect("helper is not parallel to e1")
    });
    (e1, e2)
}

/// Exhaustive search over parametrized qubit POVMs for two states, giving
/// a lower bound on the optimal success probability.
///
/// - `Med`: projective pairs `{P_n, P_{-n}}` over a `grid × grid` Bloch
///   sphere grid (optimal MED measurements are projective for two states).
/// - `Frio`: `{a₁P_u, a₂P_v, I − a₁P_u − a₂P_v}` with `u, v` on the great
///   circle through both Bloch vectors and `a₁` on a grid (`grid³`
///   candidates). For fixed `(u, v, a₁)` the objective grows with `a₂`, so
///   `a₂` takes the largest value allowed by positivity of `Π_?` and the
///   rate constraint.
///
/// Returns `-∞` when no candidate is feasible.
pub fn brute_force_qubit_povm(spec: &ProblemSpec, scheme: &SchemeConfig, grid: usize) -> Result<f64> {
    if spec.dim() != 2 || spec.num_states() != 2 {
        return Err(QsdError::InvalidProblem("brute force needs two qubit states".into()));
    }
    if grid < 2 {
        return Err(QsdError::InvalidParameter("grid must be at least 2".into()));
    }
    let noisy = spec.noisy_states(scheme.lambda_eval)?;
    let (p1, p2) = (spec.priors()[0], spec.priors()[1]);
    let r1 = bloch_vector(noisy[0].matrix());
    let r2 = bloch_vector(noisy[1].matrix());
    match scheme.scheme {
        Scheme::Med => Ok(med_grid(p1, p2, &r1, &r2, grid)),
        Scheme::Frio { rate, bound } => Ok(frio_grid(p1, p2, &r1, &r2, rate, bound, grid)),
        _ => Err(QsdError::InvalidParameter(format!(
            "no brute-force oracle for {}",
            scheme.scheme.name()
        ))),
    }
}

fn med_grid(p1: f64, p2: f64, r1: &[f64; 3], r2: &[f64; 3], grid: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let mut best = f64::NEG_INFINITY;
    for a in 0..=grid {
        let theta = pi * a as f64 / grid as f64;
        for b in 0..grid {
            let phi = 2.0 * pi * b as f64 / grid as f64;
            let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            let v = p1 * 0.5 * (1.0 + dot3(&n, r1)) + p2 * 0.5 * (1.0 - dot3(&n, r2));
            best = best.max(v);
        }
    }
    best
}

fn frio_grid(p1: f64, p2: f64, r1: &[f64; 3], r2: &[f64; 3], rate: f64, bound: FrioBound, grid: usize) -> f64 {
    let (e1, e2) = spanning_plane(r1, r2);
    let dirs: Vec<[f64; 3]> = (0..grid)
        .map(|t| {
            let th = 2.0 * std::f64::consts::PI * t as f64 / grid as f64;
            let (s, c) = th.sin_cos();
            [c * e1[0] + s * e2[0], c * e1[1] + s * e2[1], c * e1[2] + s * e2[2]]
        })
        .collect();
    // Tr(P_n ρ) = (1 + n·r)/2
    let hit = |n: &[f64; 3], r: &[f64; 3]| 0.5 * (1.0 + dot3(n, r));
    let mut best = f64::NEG_INFINITY;
    for u in &dirs {
        for v in &dirs {
            let overlap = 0.5 * (1.0 + dot3(u, v));
            let (u1, u2) = (hit(u, r1), hit(u, r2));
            let (v1, v2) = (hit(v, r1), hit(v, r2));
            let mass_u = p1 * u1 + p2 * u2;
            let mass_v = p1 * v1 + p2 * v2;
            for a in 0..=grid {
                let a1 = a as f64 / grid as f64;
                // I − a₁P_u − a₂P_v ⪰ 0  ⇔  a₂ ≤ 1 / ⟨v|(I − a₁P_u)⁻¹|v⟩
                let psd_cap = if a1 < 1.0 {
                    1.0 / (1.0 + a1 / (1.0 - a1) * overlap)
                } else if overlap < 1e-12 {
                    1.0
                } else {
                    0.0
                };
                // P_inc = 1 − a₁·mass_u − a₂·mass_v
                let free = 1.0 - a1 * mass_u - rate;
                let (lo, hi) = match bound {
                    FrioBound::AtLeast => {
                        let cap = if mass_v > 0.0 {
                            free / mass_v
                        } else if free >= 0.0 {
                            f64::INFINITY
                        } else {
                            -1.0
                        };
                        (0.0, psd_cap.min(cap))
                    }
                    FrioBound::AtMost => {
                        let floor = if mass_v > 0.0 {
                            free / mass_v
                        } else if free <= 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        };
                        (floor.max(0.0), psd_cap)
                    }
                };
                if hi < lo || hi < 0.0 {
                    continue;
                }
                let a2 = hi;
                best = best.max(p1 * a1 * u1 + p2 * a2 * v2);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::states::make_single_qubit_pair;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn basis(i: usize) -> PureState {
        PureState::basis(1, i).unwrap()
    }

    fn pair_spec(a: &PureState, b: &PureState, p1: f64) -> ProblemSpec {
        ProblemSpec::from_pure(&[a.clone(), b.clone()], vec![p1, 1.0 - p1]).unwrap()
    }

    #[test]
    fn helstrom_cases() {
        let (z, o) = (basis(0).density(), basis(1).density());
        assert!((helstrom_two_state(&z, &o, 0.5).unwrap() - 1.0).abs() < 1e-12);
        for p in [0.1, 0.5, 0.8] {
            let v = helstrom_two_state(&z, &z, p).unwrap();
            assert!((v - p.max(1.0 - p)).abs() < 1e-12);
        }
        let pair = make_single_qubit_pair();
        let v = helstrom_two_state(&pair[0].density(), &pair[1].density(), 0.5).unwrap();
        assert!((v - (1.0 + H) / 2.0).abs() < 1e-12);
        assert!(helstrom_two_state(&z, &z, 1.5).is_err());
    }

    #[test]
    fn uqsd_closed_form_cases() {
        assert!((uqsd_two_pure(&basis(0), &basis(1), 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(uqsd_two_pure(&basis(0), &basis(0), 0.5).unwrap().abs() < 1e-12);
        let pair = make_single_qubit_pair();
        assert!((uqsd_two_pure(&pair[0], &pair[1], 0.5).unwrap() - (1.0 - H)).abs() < 1e-12);
    }

    /// Independent derivation: conclusive elements `a|ψ₂⊥⟩⟨ψ₂⊥|` and
    /// `b|ψ₁⊥⟩⟨ψ₁⊥|` with a grid over `a` and the largest admissible `b`.
    #[test]
    fn uqsd_matches_grid_over_element_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let t1: f64 = rng.random::<f64>() * std::f64::consts::PI;
            let t2: f64 = rng.random::<f64>() * std::f64::consts::PI;
            let p1: f64 = 0.1 + 0.8 * rng.random::<f64>();
            let psi = |t: f64| DVector::from_vec(vec![c(t.cos(), 0.0), c(t.sin(), 0.0)]);
            let perp = |t: f64| DVector::from_vec(vec![c(-t.sin(), 0.0), c(t.cos(), 0.0)]);
            let (a_vec, b_vec) = (psi(t1), psi(t2));
            let (a_perp, b_perp) = (perp(t1), perp(t2));
            let hit1 = a_vec.dotc(&b_perp).norm_sqr();
            let hit2 = b_vec.dotc(&a_perp).norm_sqr();
            let overlap = b_perp.dotc(&a_perp).norm_sqr();
            let mut best: f64 = 0.0;
            let n = 20_000;
            for s in 0..=n {
                let a = s as f64 / n as f64;
                let b = if a < 1.0 {
                    1.0 / (1.0 + a / (1.0 - a) * overlap)
                } else if overlap < 1e-12 {
                    1.0
                } else {
                    0.0
                };
                best = best.max(p1 * a * hit1 + (1.0 - p1) * b * hit2);
            }
            let closed = uqsd_two_pure(
                &PureState::new(1, a_vec).unwrap(),
                &PureState::new(1, b_vec).unwrap(),
                p1,
            )
            .unwrap();
            assert!(closed >= best - 1e-12);
            assert!((closed - best).abs() < 1e-3, "{closed} vs {best}");
        }
    }

    #[test]
    fn brute_force_med() {
        let spec = pair_spec(&basis(0), &basis(1), 0.5);
        let cfg = SchemeConfig::new(Scheme::Med, 0.0);
        assert!((brute_force_qubit_povm(&spec, &cfg, 2).unwrap() - 1.0).abs() < 1e-12);
        let pair = make_single_qubit_pair();
        let spec = pair_spec(&pair[0], &pair[1], 0.5);
        let v = brute_force_qubit_povm(&spec, &cfg, 200).unwrap();
        assert!((0.8535 - 1e-3..=(1.0 + H) / 2.0 + 1e-12).contains(&v));
    }

    #[test]
    fn brute_force_frio_limits() {
        let pair = make_single_qubit_pair();
        let spec = pair_spec(&pair[0], &pair[1], 0.5);
        let at = |rate| {
            let cfg = SchemeConfig::new(
                Scheme::Frio {
                    rate,
                    bound: FrioBound::AtLeast,
                },
                0.0,
            );
            brute_force_qubit_povm(&spec, &cfg, 120).unwrap()
        };
        assert!((at(0.0) - (1.0 + H) / 2.0).abs() < 1e-3);
        assert!(at(1.0).abs() < 1e-12);
        let mid = at(0.5);
        assert!(mid > 0.0 && mid < at(0.0));
    }

    #[test]
    fn rejects_unsupported_inputs() {
        let pair = make_single_qubit_pair();
        let spec = pair_spec(&pair[0], &pair[1], 0.5);
        assert!(brute_force_qubit_povm(&spec, &SchemeConfig::new(Scheme::Uqsd, 0.0), 10).is_err());
        assert!(brute_force_qubit_povm(&spec, &SchemeConfig::new(Scheme::Med, 0.0), 1).is_err());
    }
}
