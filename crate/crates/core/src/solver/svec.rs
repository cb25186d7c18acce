//! Scaled vectorization of complex Hermitian matrices.
//!
//! A `d×d` Hermitian matrix maps to `d²` reals: the diagonal, then for each
//! `i < j` (row-major) the pair `√2·Re M_ij, √2·Im M_ij`. With this scaling
//! `⟨svec A, svec B⟩ = Tr(AB)`.

use std::f64::consts::SQRT_2;

use crate::linalg::{c, CMatrix};

pub const fn svec_len(dim: usize) -> usize {
    dim * dim
}

pub fn svec_into(m: &CMatrix, out: &mut [f64]) {
    let d = m.nrows();
    debug_assert_eq!(out.len(), svec_len(d));
    for i in 0..d {
        out[i] = m[(i, i)].re;
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            // Average the two triangles so slightly non-Hermitian input is
            // symmetrized on the way in.
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[k] = SQRT_2 * z.re;
            out[k + 1] = SQRT_2 * z.im;
            k += 2;
        }
    }
}

pub fn svec(m: &CMatrix) -> Vec<f64> {
    let mut out = vec![0.0; svec_len(m.nrows())];
    svec_into(m, &mut out);
    out
}

pub fn smat(v: &[f64], dim: usize) -> CMatrix {
    debug_assert_eq!(v.len(), svec_len(dim));
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = c(v[i], 0.0);
    }
    let mut k = dim;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let z = c(v[k], v[k + 1]) / SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitize, trace_product};
    use proptest::prelude::*;

    fn hermitian(dim: usize, raw: &[f64]) -> CMatrix {
        let m = CMatrix::from_fn(dim, dim, |i, j| c(raw[2 * (i * dim + j)], raw[2 * (i * dim + j) + 1]));
        hermitize(&m)
    }

    proptest! {
        #[test]
        fn round_trip_and_inner_products(
            dim in 1usize..6,
            raw_a in proptest::collection::vec(-2.0f64..2.0, 72),
            raw_b in proptest::collection::vec(-2.0f64..2.0, 72),
        ) {
            let a = hermitian(dim, &raw_a);
            let b = hermitian(dim, &raw_b);
            let va = svec(&a);
            let vb = svec(&b);
            prop_assert!((smat(&va, dim) - &a).norm() <= 1e-14);
            let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
            prop_assert!((dot - trace_product(&a, &b)).abs() <= 1e-12);
        }
    }

    #[test]
    fn identity_layout() {
        let v = svec(&CMatrix::identity(3, 3));
        assert_eq!(v, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
