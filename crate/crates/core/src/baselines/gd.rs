use super::line_search::{searched_step, LineSearchConfig};
use crate::error::Result;
use crate::framework::{AlgorithmSpec, Curvature, Hyper, OracleOutput, ProblemTransform, State, UpdateOutput};
use crate::numerics::{Matrix, Vector};
use crate::problems::Problem;

/// `x_{k+1} = x_k − γ∇f(x_k)`; the oracle is the gradient alone.
#[derive(Debug, Clone)]
pub struct GradientDescent {
    pub gamma: f64,
    pub ls: LineSearchConfig,
}

pub fn gd_spec(gamma: f64) -> GradientDescent {
    GradientDescent {
        gamma,
        ls: LineSearchConfig::default(),
    }
}

/// Step-size rule making a fixed-step gradient method equivariant under `t`:
/// `γ̂ = λ²γ` for geometric scaling, `γ̂ = γ/λ` for function scaling.
pub(crate) fn adapt_gradient_step(gamma: f64, t: &ProblemTransform) -> f64 {
    match t {
        ProblemTransform::GeometricScale(l) => l * l * gamma,
        ProblemTransform::FunctionScale(l) => gamma / l,
        _ => gamma,
    }
}

impl AlgorithmSpec for GradientDescent {
    fn name(&self) -> &str {
        "gd"
    }

    fn input_width(&self) -> usize {
        1
    }

    fn default_hyper(&self) -> Hyper {
        Hyper::new().with("gamma", self.gamma)
    }

    fn initial_state(&self, _problem: &Problem, _hyper: &Hyper) -> Result<State> {
        Ok(State::new())
    }

    fn oracle(&self, problem: &Problem, x: &Vector, _state: &State, _hyper: &Hyper) -> Result<OracleOutput> {
        let g = problem.gradient(x);
        Ok(OracleOutput {
            input: g.to_column(),
            gradient: g,
            aux: Vec::new(),
        })
    }

    fn model(&self, _input: &Matrix) -> Result<Option<Vector>> {
        Ok(None)
    }

    fn update(
        &self,
        problem: &Problem,
        x: &Vector,
        oracle: &OracleOutput,
        _prediction: Option<&Vector>,
        _state: &State,
        hyper: &Hyper,
    ) -> Result<UpdateOutput> {
        let g = &oracle.gradient;
        let (next_x, step_size) = if self.ls.enabled {
            searched_step(problem, x, g, &g.scale(-1.0), &self.ls)?
        } else {
            let gamma = hyper.get("gamma")?;
            (x.axpy(-gamma, g), gamma)
        };
        Ok(UpdateOutput {
            next_x,
            step_size,
            curvature: Curvature::Bounds(1.0, 1.0),
            skipped: false,
        })
    }

    fn storage(&self, state: State, _x: &Vector, _oracle: &OracleOutput, _update: &UpdateOutput) -> Result<State> {
        Ok(state)
    }

    fn adapt_hyper(&self, hyper: &Hyper, t: &ProblemTransform) -> Option<Hyper> {
        let gamma = hyper.get("gamma").ok()?;
        Some(hyper.clone().with("gamma", adapt_gradient_step(gamma, t)))
    }
}
