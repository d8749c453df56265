use super::Objective;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Vector};

/// Step of the single gradient step producing `x₀` from `x₋₁`.
pub const DEFAULT_INIT_STEP: f64 = 1e-3;

/// `x₋₁ ~ N(0, I)` and `x₀ = x₋₁ − step·∇f(x₋₁)`.
pub fn make_init_pair(objective: &dyn Objective, rng: &mut Rng, step: f64) -> Result<(Vector, Vector)> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("init step {step} must be positive")));
    }
    let x_prev = rng.normal_vector(objective.dim());
    let g = objective.gradient(&x_prev);
    if !g.is_finite() {
        return Err(Error::Eval("gradient at the random start".into()));
    }
    let x0 = x_prev.axpy(-step, &g);
    Ok((x_prev, x0))
}
