use std::time::Instant;

use super::spec::{AlgorithmSpec, Curvature, Hyper};
use super::state::State;
use super::trajectory::{EigenBound, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::eigen_bounds;
use crate::problems::Problem;

/// Dimension above which preconditioner spectra are recorded only every
/// tenth iteration.
pub const EIGEN_FULL_RECORD_MAX_DIM: usize = 200;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Stop once `‖∇f(x_k)‖ ≤ grad_tol`.
    pub grad_tol: Option<f64>,
}

/// Runs `spec` for `k_max` iterations (see [`run_with`]).
pub fn run(spec: &dyn AlgorithmSpec, problem: &Problem, s0: State, k_max: usize, hyper: &Hyper) -> Result<Trajectory> {
    run_with(spec, problem, s0, k_max, hyper, RunOptions::default())
}

/// The generic loop: `I_k = C(f, x_k, S_k)`, `y_k = M(I_k)`,
/// `x_{k+1} = U(I_k, y_k, S_k, Γ)`, `S_{k+1} = S(S_k, x_k, I_k, y_k)`.
pub fn run_with(
    spec: &dyn AlgorithmSpec,
    problem: &Problem,
    s0: State,
    k_max: usize,
    hyper: &Hyper,
    opts: RunOptions,
) -> Result<Trajectory> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let start = Instant::now();
    let n = problem.dim();
    let mut traj = Trajectory {
        algorithm: spec.name().to_string(),
        problem: problem.label.clone(),
        ..Default::default()
    };
    let mut x = problem.x0.clone();
    let mut state = s0;
    traj.iterates.push(x.clone());
    traj.f_values.push(problem.value(&x));

    let diverged = |traj: &mut Trajectory, k: usize| {
        traj.wall_time = start.elapsed().as_secs_f64();
        Error::Divergence {
            iteration: k,
            partial: Box::new(std::mem::take(traj)),
        }
    };

    for k in 0..k_max {
        let oracle = spec.oracle(problem, &x, &state, hyper)?;
        if oracle.input.shape() != (n, spec.input_width()) {
            return Err(Error::Shape(format!(
                "oracle of '{}' returned {:?}, expected ({n}, {})",
                spec.name(),
                oracle.input.shape(),
                spec.input_width()
            )));
        }
        let gnorm = oracle.gradient.norm();
        traj.grad_norms.push(gnorm);
        if !gnorm.is_finite() {
            return Err(diverged(&mut traj, k));
        }
        if opts.grad_tol.is_some_and(|tol| gnorm <= tol) {
            traj.wall_time = start.elapsed().as_secs_f64();
            return Ok(traj);
        }
        let prediction = spec.model(&oracle.input)?;
        let upd = spec.update(problem, &x, &oracle, prediction.as_ref(), &state, hyper)?;
        if upd.skipped {
            traj.skipped_updates += 1;
        }
        match &upd.curvature {
            Curvature::None => {}
            Curvature::Bounds(lo, hi) => traj.b_eigen_bounds.push(EigenBound {
                k,
                min: *lo,
                max: *hi,
            }),
            Curvature::Matrix(b) => {
                if !b.is_finite() {
                    return Err(diverged(&mut traj, k));
                }
                if n <= EIGEN_FULL_RECORD_MAX_DIM || k % 10 == 0 {
                    let (lo, hi) = eigen_bounds(b)?;
                    traj.b_eigen_bounds.push(EigenBound { k, min: lo, max: hi });
                }
            }
        }
        traj.step_sizes_used.push(upd.step_size);
        if !upd.next_x.is_finite() {
            return Err(diverged(&mut traj, k + 1));
        }
        state = spec.storage(state, &x, &oracle, &upd)?;
        x = upd.next_x;
        let f = problem.value(&x);
        traj.iterates.push(x.clone());
        traj.f_values.push(f);
        if !f.is_finite() {
            return Err(diverged(&mut traj, k + 1));
        }
    }
    traj.grad_norms.push(problem.gradient(&x).norm());
    traj.wall_time = start.elapsed().as_secs_f64();
    Ok(traj)
}
