//! First-order conic solver for products of complex Hermitian PSD cones,
//! nonnegative orthants, and free variables.

mod admm;
mod program;
pub mod svec;

pub use admm::solve;
pub use program::{Cone, ConeProgram, Solution, SolveStatus, SolverSettings};

use crate::error::Result;
use crate::linalg::CMatrix;

/// Nearest PSD matrix in Frobenius norm (symmetrize, clip negative
/// eigenvalues).
pub fn psd_project(m: &CMatrix) -> Result<CMatrix> {
    crate::linalg::psd_project(m)
}

/// Extracts a PSD block of a solution as a matrix.
pub fn block_matrix(program: &ConeProgram, solution: &Solution, block: usize) -> Option<CMatrix> {
    match program.blocks().get(block)? {
        Cone::PsdComplex(d) => Some(svec::smat(&solution.x[program.block_range(block)], *d)),
        _ => None,
    }
}
