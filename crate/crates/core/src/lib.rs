//! Learned quasi-Newton optimization.
//!
//! - [`numerics`]: dense linear algebra, seeded streams, Jacobi
//!   eigendecomposition and a reverse-mode tape.
//! - [`problems`]: quadratic, logistic and ridge objectives, LIBSVM/CSV
//!   loaders and problem-set manifests.
//! - [`framework`]: the oracle / model / update / storage runner,
//!   trajectories and problem transformations.
//! - [`baselines`]: gradient descent, heavy ball, Newton, ADAM, BFGS and
//!   backtracking line search.
//! - [`loa_model`] and [`loa_bfgs`]: the prediction network and the
//!   quasi-Newton method it drives.
//! - [`training`]: unrolled training against a BFGS reference.
//! - [`equivariance`]: transformation checks, the invariance table and the
//!   descent monitor.

pub mod baselines;
pub mod equivariance;
pub mod error;
pub mod framework;
pub mod loa_bfgs;
pub mod loa_model;
pub mod numerics;
pub mod problems;
pub mod training;

pub use error::{Error, Result};
