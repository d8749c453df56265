use super::line_search::{searched_step, LineSearchConfig};
use crate::error::{Error, Result};
use crate::framework::{AlgorithmSpec, Curvature, Hyper, OracleOutput, ProblemTransform, State, UpdateOutput};
use crate::numerics::{solve, Matrix, Vector};
use crate::problems::Problem;

/// `x_{k+1} = x_k − [∇²f(x_k)]⁻¹∇f(x_k)` with the analytic Hessian.
#[derive(Debug, Clone, Default)]
pub struct Newton {
    pub ls: LineSearchConfig,
}

pub fn newton_spec(ls: LineSearchConfig) -> Newton {
    Newton { ls }
}

impl AlgorithmSpec for Newton {
    fn name(&self) -> &str {
        "newton"
    }

    fn input_width(&self) -> usize {
        1
    }

    fn default_hyper(&self) -> Hyper {
        Hyper::new()
    }

    fn initial_state(&self, problem: &Problem, _hyper: &Hyper) -> Result<State> {
        if problem.hessian(&problem.x0).is_none() {
            return Err(Error::Capability(format!("'{}' has no Hessian", problem.label)));
        }
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
        _hyper: &Hyper,
    ) -> Result<UpdateOutput> {
        let h = problem
            .hessian(x)
            .ok_or_else(|| Error::Capability(format!("'{}' has no Hessian", problem.label)))?;
        let step = solve(&h, &oracle.gradient)?;
        let (next_x, step_size) = if self.ls.enabled {
            searched_step(problem, x, &oracle.gradient, &step.scale(-1.0), &self.ls)?
        } else {
            (x.sub(&step), 1.0)
        };
        Ok(UpdateOutput {
            next_x,
            step_size,
            curvature: Curvature::None,
            skipped: false,
        })
    }

    fn storage(&self, state: State, _x: &Vector, _oracle: &OracleOutput, _update: &UpdateOutput) -> Result<State> {
        Ok(state)
    }

    fn adapt_hyper(&self, hyper: &Hyper, _t: &ProblemTransform) -> Option<Hyper> {
        Some(hyper.clone())
    }
}
