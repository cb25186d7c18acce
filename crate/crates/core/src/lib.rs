//! Quantum state discrimination: convex measurement design, an in-crate
//! conic solver, minimal-ancilla Naimark dilations, and measurement
//! simulation.

pub mod dilation;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod oracles;
pub mod povm;
pub mod random;
pub mod schemes;
pub mod solver;
pub mod states;

pub use error::{QsdError, Result};
