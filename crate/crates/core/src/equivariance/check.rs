use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::{run, transform_problem, AlgorithmSpec, ProblemTransform, Trajectory};
use crate::numerics::Vector;
use crate::problems::Problem;

/// Deviations above this are a clear failure; between the pass tolerance
/// and this value the outcome is left undecided.
pub const FAIL_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub algorithm: String,
    pub problem: String,
    pub transform: ProblemTransform,
    pub k_run: usize,
    /// `max_k ‖T(x_k) − x̂_k‖ / max_j ‖T(x_j)‖` (raw iterates for function
    /// scaling).
    pub max_rel_iterate_dev: f64,
    /// `max_k |T(f(x_k)) − f̂(x̂_k)| / max_j |T(f(x_j))|`.
    pub max_rel_value_dev: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub gamma_adapted: bool,
    /// Why the comparison could not be made, when it could not.
    pub diagnostic: Option<String>,
}

pub fn verdict_for(dev: f64, tol: f64) -> Verdict {
    if dev <= tol {
        Verdict::Pass
    } else if dev > FAIL_THRESHOLD || dev.is_nan() {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

fn max_norm(xs: &[Vector]) -> f64 {
    xs.iter().map(Vector::norm).fold(0.0, f64::max)
}

/// Relative iterate and value deviations between the original trajectory
/// mapped by `t` and the trajectory on the transformed problem.
pub fn deviations(t: &ProblemTransform, orig: &Trajectory, hat: &Trajectory) -> (f64, f64) {
    let mapped: Vec<Vector> = match t {
        ProblemTransform::FunctionScale(_) => orig.iterates.clone(),
        _ => orig.iterates.iter().map(|x| t.point(x)).collect(),
    };
    let xs = max_norm(&mapped).max(f64::MIN_POSITIVE);
    let it = mapped
        .iter()
        .zip(&hat.iterates)
        .map(|(a, b)| a.sub(b).norm() / xs)
        .fold(0.0, f64::max);
    let fv: Vec<f64> = orig.f_values.iter().map(|f| t.value(*f)).collect();
    let fs = fv.iter().map(|f| f.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let val = fv
        .iter()
        .zip(&hat.f_values)
        .map(|(a, b)| (a - b).abs() / fs)
        .fold(0.0, f64::max);
    let len_mismatch = orig.iterates.len() != hat.iterates.len();
    if len_mismatch {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (it, val)
    }
}

/// Runs `spec` on `problem` and on its image under `t` (initial state
/// mapped by role) and compares the trajectories. With `adapt_gamma` the
/// transformed run uses the spec's adapted hyper-parameters; a spec without
/// an adaptation rule for `t` is reported as failing.
pub fn check_equivariance(
    spec: &dyn AlgorithmSpec,
    t: &ProblemTransform,
    problem: &Problem,
    k: usize,
    tol: f64,
    adapt_gamma: bool,
) -> Result<EquivarianceReport> {
    if let Some(n) = t.dim() {
        if n != problem.dim() {
            return Err(Error::Dimension(format!(
                "transform of dimension {n} on a {}-dimensional problem",
                problem.dim()
            )));
        }
    }
    let hyper = spec.default_hyper();
    let s0 = spec.initial_state(problem, &hyper)?;
    let (p_hat, s_hat) = transform_problem(t, problem, &s0)?;
    let mut report = EquivarianceReport {
        algorithm: spec.name().to_string(),
        problem: problem.label.clone(),
        transform: t.clone(),
        k_run: k,
        max_rel_iterate_dev: f64::INFINITY,
        max_rel_value_dev: f64::INFINITY,
        tol,
        verdict: Verdict::Fail,
        gamma_adapted: false,
        diagnostic: None,
    };
    let hyper_hat = if adapt_gamma {
        match spec.adapt_hyper(&hyper, t) {
            Some(h) => {
                report.gamma_adapted = true;
                h
            }
            None => {
                report.diagnostic = Some(format!("no step-size rule for {}", t.kind()));
                return Ok(report);
            }
        }
    } else {
        hyper.clone()
    };
    let runs = run(spec, problem, s0, k, &hyper).and_then(|a| run(spec, &p_hat, s_hat, k, &hyper_hat).map(|b| (a, b)));
    match runs {
        Ok((a, b)) => {
            let (it, val) = deviations(t, &a, &b);
            report.max_rel_iterate_dev = it;
            report.max_rel_value_dev = val;
            report.verdict = verdict_for(it, tol);
        }
        Err(e @ Error::Divergence { .. }) => report.diagnostic = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{adam_spec, gd_spec, heavy_ball_spec};
    use crate::numerics::Rng;
    use crate::problems::gen_quadratic;

    fn problem() -> Problem {
        gen_quadratic(3, &mut Rng::new(5, "eq")).unwrap()
    }

    #[test]
    fn heavy_ball_translation() {
        let p = problem();
        let hb = heavy_ball_spec(0.5, 1.0 / p.lipschitz().unwrap()).unwrap();
        let t = ProblemTransform::random_translation(3, &mut Rng::new(1, "t"));
        let r = check_equivariance(&hb, &t, &p, 20, 1e-9, false).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn heavy_ball_geometric_needs_adapted_step() {
        let p = problem();
        let hb = heavy_ball_spec(0.5, 1.0 / p.lipschitz().unwrap()).unwrap();
        let t = ProblemTransform::GeometricScale(3.0);
        let fixed = check_equivariance(&hb, &t, &p, 20, 1e-8, false).unwrap();
        assert_eq!(fixed.verdict, Verdict::Fail, "{fixed:?}");
        let adapted = check_equivariance(&hb, &t, &p, 20, 1e-8, true).unwrap();
        assert_eq!(adapted.verdict, Verdict::Pass, "{adapted:?}");
        assert!(adapted.gamma_adapted);
    }

    #[test]
    fn gd_function_scale_adapted() {
        let p = problem();
        let gd = gd_spec(1.0 / p.lipschitz().unwrap());
        let t = ProblemTransform::FunctionScale(10.0);
        assert_eq!(check_equivariance(&gd, &t, &p, 20, 1e-8, false).unwrap().verdict, Verdict::Fail);
        assert_eq!(check_equivariance(&gd, &t, &p, 20, 1e-8, true).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn adam_rotation_has_no_rule() {
        let p = problem();
        let adam = adam_spec(0.9, 0.999, 0.05, 0.0).unwrap();
        let t = ProblemTransform::random_orthogonal(3, &mut Rng::new(2, "q"));
        let fixed = check_equivariance(&adam, &t, &p, 20, 1e-8, false).unwrap();
        assert_eq!(fixed.verdict, Verdict::Fail);
        let adapted = check_equivariance(&adam, &t, &p, 20, 1e-8, true).unwrap();
        assert!(!adapted.gamma_adapted && adapted.diagnostic.is_some());
    }

    #[test]
    fn wrong_dimension_rejected() {
        let p = problem();
        let gd = gd_spec(0.1);
        let t = ProblemTransform::Permutation(vec![1, 0]);
        assert!(matches!(check_equivariance(&gd, &t, &p, 5, 1e-8, false), Err(Error::Dimension(_))));
    }

    #[test]
    fn gray_zone_is_inconclusive() {
        assert_eq!(verdict_for(1e-9, 1e-8), Verdict::Pass);
        assert_eq!(verdict_for(1e-5, 1e-8), Verdict::Inconclusive);
        assert_eq!(verdict_for(1e-2, 1e-8), Verdict::Fail);
        assert_eq!(verdict_for(f64::NAN, 1e-8), Verdict::Fail);
    }
}
