use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::Trajectory;

/// Relative slack allowed on `f_{k+1} ≤ f_k`.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Verdict {
    /// `min_k λ_min(B_k)`.
    pub c: f64,
    /// `max_k λ_max(B_k)`.
    pub big_c: f64,
    pub lipschitz: f64,
    pub gamma: f64,
    /// `c > 0` and `γ ≤ 2/(C·L)`.
    pub hypotheses_met: bool,
    /// Whether `f` was non-increasing; `None` when the hypotheses fail and
    /// nothing is asserted.
    pub monotone: Option<bool>,
    /// Largest observed increase `f_{k+1} − f_k` (≤ 0 for a monotone run).
    pub max_increase: f64,
    pub final_grad_norm: f64,
    pub min_grad_norm: f64,
}

/// Descent monitor: with preconditioner spectra in `[c, C]`, `c > 0`, and
/// `γ ≤ 2/(CL)`, the values must not increase.
pub fn check_theorem2(traj: &Trajectory, lipschitz: f64, gamma: f64) -> Result<Theorem2Verdict> {
    if traj.b_eigen_bounds.is_empty() {
        return Err(Error::Capability(format!(
            "trajectory of '{}' records no preconditioner spectra",
            traj.algorithm
        )));
    }
    let c = traj.b_eigen_bounds.iter().map(|b| b.min).fold(f64::INFINITY, f64::min);
    let big_c = traj.b_eigen_bounds.iter().map(|b| b.max).fold(f64::NEG_INFINITY, f64::max);
    let hypotheses_met = c > 0.0 && gamma <= 2.0 / (big_c * lipschitz);
    let mut max_increase = f64::NEG_INFINITY;
    let mut monotone = true;
    for w in traj.f_values.windows(2) {
        let inc = w[1] - w[0];
        max_increase = max_increase.max(inc);
        if inc > MONOTONE_SLACK * w[0].abs() {
            monotone = false;
        }
    }
    Ok(Theorem2Verdict {
        c,
        big_c,
        lipschitz,
        gamma,
        hypotheses_met,
        monotone: hypotheses_met.then_some(monotone),
        max_increase,
        final_grad_norm: traj.grad_norms.last().copied().unwrap_or(f64::NAN),
        min_grad_norm: traj.min_grad_norm(),
    })
}

/// Whether a run violates monotone descent regardless of the hypotheses.
pub fn violates_monotonicity(traj: &Trajectory) -> bool {
    traj.f_values
        .windows(2)
        .any(|w| w[1] - w[0] > MONOTONE_SLACK * w[0].abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::gd_spec;
    use crate::framework::{run, AlgorithmSpec};
    use crate::numerics::Rng;
    use crate::problems::{gen_quadratic_with_spectrum, Spectrum};

    #[test]
    fn gradient_descent_descends() {
        let spec_range = Spectrum {
            min_low: 1.0,
            min_high: 2.0,
            max_low: 2.0,
            max_high: 4.0,
        };
        let p = gen_quadratic_with_spectrum(5, spec_range, &mut Rng::new(0, "t2")).unwrap();
        let l = p.lipschitz().unwrap();
        let gd = gd_spec(1.9 / l);
        let h = gd.default_hyper();
        let traj = run(&gd, &p, gd.initial_state(&p, &h).unwrap(), 200, &h).unwrap();
        let v = check_theorem2(&traj, l, 1.9 / l).unwrap();
        assert!(v.hypotheses_met);
        assert_eq!(v.monotone, Some(true));
        assert_eq!((v.c, v.big_c), (1.0, 1.0));
    }

    #[test]
    fn missing_spectra_is_capability_error() {
        let t = Trajectory::default();
        assert!(matches!(check_theorem2(&t, 1.0, 1.0), Err(Error::Capability(_))));
    }
}
