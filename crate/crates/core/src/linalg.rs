//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64;

use crate::error::{QsdError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// `(M + M†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise `|M - M†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `Re Tr(A B)`, exact for Hermitian arguments.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (a[(i, j)], b[(j, i)]);
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending
/// order. Column `j` of the returned matrix is the eigenvector of value `j`.
pub fn hermitian_eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(hermitize(m), f64::EPSILON, 0).ok_or(QsdError::EigenFailure(n))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    let (values, _) = hermitian_eigh(m)?;
    Ok(values.first().copied().unwrap_or(0.0))
}

/// Rebuilds `Σ f(λ_j) v_j v_j†`, skipping terms where `f` returns zero.
pub fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (j, &lam) in values.iter().enumerate() {
        let w = f(lam);
        if w == 0.0 {
            continue;
        }
        let v = vectors.column(j);
        for col in 0..n {
            let vc = v[col].conj() * w;
            for row in 0..n {
                out[(row, col)] += v[row] * vc;
            }
        }
    }
    out
}

/// Nearest PSD matrix in Frobenius norm: symmetrize, then clip negative
/// eigenvalues to zero.
pub fn psd_project(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigh(m)?;
    if values.first().is_none_or(|&v| v >= 0.0) {
        return Ok(hermitize(m));
    }
    Ok(spectral_map(&values, &vectors, |v| v.max(0.0)))
}

/// Principal square root of a PSD matrix (negative eigenvalues clipped).
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigh(m)?;
    Ok(spectral_map(&values, &vectors, |v| v.max(0.0).sqrt()))
}

/// `M^{-1/2}` for a positive-definite matrix; errors when the smallest
/// eigenvalue is not above `floor`.
pub fn inv_sqrt_pd(m: &CMatrix, floor: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigh(m)?;
    if let Some(&lo) = values.first() {
        if lo <= floor {
            return Err(QsdError::InvalidParameter(format!(
                "matrix not positive definite (min eigenvalue {lo:.3e})"
            )));
        }
    }
    Ok(spectral_map(&values, &vectors, |v| 1.0 / v.sqrt()))
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Deviation of a column set from orthonormality, `max |V†V - I|`.
pub fn isometry_error(v: &CMatrix) -> f64 {
    let gram = v.adjoint() * v;
    let n = gram.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}
