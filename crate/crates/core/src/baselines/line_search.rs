use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::problems::Problem;

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    pub enabled: bool,
    /// Trial multiplier per backtrack, in `(0, 1)`.
    pub shrink: f64,
    /// Sufficient-decrease fraction `c₁`, in `(0, 1)`.
    pub armijo: f64,
    pub max_backtracks: usize,
    pub initial_trial: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            shrink: 0.5,
            armijo: 1e-4,
            max_backtracks: 30,
            initial_trial: 1.0,
        }
    }
}

impl LineSearchConfig {
    pub fn armijo() -> Self {
        Self {
            enabled: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidParameter(format!("shrink {} not in (0,1)", self.shrink)));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidParameter(format!("armijo {} not in (0,1)", self.armijo)));
        }
        if !(self.initial_trial > 0.0) {
            return Err(Error::InvalidParameter("initial trial must be positive".into()));
        }
        Ok(())
    }

    /// The trial after the last allowed backtrack.
    pub fn smallest_trial(&self) -> f64 {
        self.initial_trial * self.shrink.powi(self.max_backtracks as i32)
    }
}

/// Largest `t = t₀·βʲ`, `j ≤ max_backtracks`, with
/// `f(x + t·dir) ≤ f(x) + c₁·t·⟨∇f(x), dir⟩`.
pub fn backtracking_search(
    problem: &Problem,
    x: &Vector,
    fx: f64,
    grad: &Vector,
    direction: &Vector,
    ls: &LineSearchConfig,
) -> Result<f64> {
    ls.validate()?;
    let slope = grad.dot(direction);
    let mut t = ls.initial_trial;
    for _ in 0..=ls.max_backtracks {
        let ft = problem.value(&x.axpy(t, direction));
        if ft <= fx + ls.armijo * t * slope {
            return Ok(t);
        }
        t *= ls.shrink;
    }
    Err(Error::LineSearchFailure {
        backtracks: ls.max_backtracks,
        smallest_trial: ls.smallest_trial(),
    })
}

/// Step along `direction` with the searched length, falling back to the
/// smallest trial when the search fails.
pub(crate) fn searched_step(
    problem: &Problem,
    x: &Vector,
    grad: &Vector,
    direction: &Vector,
    ls: &LineSearchConfig,
) -> Result<(Vector, f64)> {
    let fx = problem.value(x);
    let t = match backtracking_search(problem, x, fx, grad, direction, ls) {
        Ok(t) => t,
        Err(Error::LineSearchFailure { smallest_trial, .. }) => smallest_trial,
        Err(e) => return Err(e),
    };
    Ok((x.axpy(t, direction), t))
}
