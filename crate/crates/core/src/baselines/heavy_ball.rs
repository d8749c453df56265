use super::gd::adapt_gradient_step;
use crate::error::{Error, Result};
use crate::framework::{AlgorithmSpec, Curvature, Hyper, OracleOutput, ProblemTransform, Role, State, UpdateOutput};
use crate::numerics::{Matrix, Vector};
use crate::problems::Problem;

/// `x_{k+1} = x_k + α(x_k − x_{k−1}) − γ∇f(x_k)`. The oracle returns
/// `(d_k, ∇f(x_k))` and the state carries `x_{k−1}`.
#[derive(Debug, Clone)]
pub struct HeavyBall {
    pub alpha: f64,
    pub gamma: f64,
}

pub fn heavy_ball_spec(alpha: f64, gamma: f64) -> Result<HeavyBall> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("momentum {alpha} not in [0, 1)")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("step {gamma} must be positive")));
    }
    Ok(HeavyBall { alpha, gamma })
}

impl AlgorithmSpec for HeavyBall {
    fn name(&self) -> &str {
        "hb"
    }

    fn input_width(&self) -> usize {
        2
    }

    fn default_hyper(&self) -> Hyper {
        Hyper::new().with("alpha", self.alpha).with("gamma", self.gamma)
    }

    fn initial_state(&self, problem: &Problem, _hyper: &Hyper) -> Result<State> {
        Ok(State::new().with_vector("x_prev", Role::PointLike, problem.x_prev.clone()))
    }

    fn oracle(&self, problem: &Problem, x: &Vector, state: &State, _hyper: &Hyper) -> Result<OracleOutput> {
        let g = problem.gradient(x);
        let d = x.sub(state.vector("x_prev")?);
        Ok(OracleOutput {
            input: Matrix::from_columns(&[&d.to_column(), &g.to_column()])?,
            gradient: g,
            aux: Vec::new(),
        })
    }

    fn model(&self, _input: &Matrix) -> Result<Option<Vector>> {
        Ok(None)
    }

    fn update(
        &self,
        _problem: &Problem,
        x: &Vector,
        oracle: &OracleOutput,
        _prediction: Option<&Vector>,
        _state: &State,
        hyper: &Hyper,
    ) -> Result<UpdateOutput> {
        let (alpha, gamma) = (hyper.get("alpha")?, hyper.get("gamma")?);
        let d = oracle.input.column(0);
        Ok(UpdateOutput {
            next_x: x.axpy(alpha, &d).axpy(-gamma, &oracle.gradient),
            step_size: gamma,
            curvature: Curvature::Bounds(1.0, 1.0),
            skipped: false,
        })
    }

    fn storage(&self, mut state: State, x: &Vector, _oracle: &OracleOutput, _update: &UpdateOutput) -> Result<State> {
        state.set_vector("x_prev", Role::PointLike, x.clone());
        Ok(state)
    }

    fn adapt_hyper(&self, hyper: &Hyper, t: &ProblemTransform) -> Option<Hyper> {
        let gamma = hyper.get("gamma").ok()?;
        Some(hyper.clone().with("gamma", adapt_gradient_step(gamma, t)))
    }
}
