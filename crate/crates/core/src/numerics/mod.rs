//! Dense linear algebra, seeded randomness, Jacobi eigendecomposition and a
//! reverse-mode differentiation tape.

mod eigen;
mod fd;
mod linalg;
pub mod ops;
mod rng;
mod solve;
mod tape;

pub use eigen::{eigen_bounds, sym_eigen, SymEigen};
pub use fd::finite_diff_grad;
pub use linalg::{Matrix, Vector};
pub use ops::{Eager, TensorOps};
pub use rng::Rng;
pub use solve::solve;
pub use tape::{NodeId, Tape};
