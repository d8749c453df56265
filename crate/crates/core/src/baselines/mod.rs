//! Hand-crafted methods expressed as algorithm specs, plus Armijo
//! backtracking.

mod adam;
mod gd;
mod heavy_ball;
pub mod line_search;
mod newton;

pub use adam::{adam_spec, Adam};
pub use gd::{gd_spec, GradientDescent};
pub use heavy_ball::{heavy_ball_spec, HeavyBall};
pub use line_search::{backtracking_search, LineSearchConfig};
pub use newton::{newton_spec, Newton};

use crate::loa_bfgs::QuasiNewtonSpec;

/// BFGS: the quasi-Newton spec with `y_k = d_k` and the same
/// Barzilai–Borwein initialization.
pub fn classical_bfgs_spec(gamma: f64, ls: LineSearchConfig) -> QuasiNewtonSpec {
    QuasiNewtonSpec::classical(gamma, ls)
}
