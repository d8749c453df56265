use crate::error::{Error, Result};
use crate::framework::{AlgorithmSpec, Curvature, Hyper, OracleOutput, ProblemTransform, Role, State, UpdateOutput};
use crate::numerics::{Matrix, Vector};
use crate::problems::Problem;

/// ADAM without bias correction:
/// `m_k = β₁m_{k−1} + (1−β₁)g`, `v²_k = β₂v²_{k−1} + (1−β₂)g⊙g`,
/// `x_{k+1} = x_k − γ·m_k/(√v²_k + ε)`.
///
/// The oracle returns `(m_k, v²_k)`; the state carries the previous pair.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub eps: f64,
    /// Negative control: replaces `g⊙g` by `‖g‖²/n` in every coordinate,
    /// which makes the method rotation-equivariant.
    pub isotropic: bool,
}

pub fn adam_spec(beta1: f64, beta2: f64, gamma: f64, eps: f64) -> Result<Adam> {
    for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
        if !(0.0..1.0).contains(&b) {
            return Err(Error::InvalidParameter(format!("{name} = {b} not in [0, 1)")));
        }
    }
    if !(gamma > 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("γ = {gamma}, ε = {eps}")));
    }
    Ok(Adam {
        beta1,
        beta2,
        gamma,
        eps,
        isotropic: false,
    })
}

impl AlgorithmSpec for Adam {
    fn name(&self) -> &str {
        if self.isotropic {
            "adam-isotropic"
        } else {
            "adam"
        }
    }

    fn input_width(&self) -> usize {
        2
    }

    fn default_hyper(&self) -> Hyper {
        Hyper::new()
            .with("beta1", self.beta1)
            .with("beta2", self.beta2)
            .with("gamma", self.gamma)
            .with("eps", self.eps)
    }

    fn initial_state(&self, problem: &Problem, _hyper: &Hyper) -> Result<State> {
        let n = problem.dim();
        Ok(State::new()
            .with_vector("m", Role::GradientLike, Vector::zeros(n))
            .with_vector("v2", Role::SquaredGradientLike, Vector::zeros(n)))
    }

    fn oracle(&self, problem: &Problem, x: &Vector, state: &State, hyper: &Hyper) -> Result<OracleOutput> {
        let (b1, b2) = (hyper.get("beta1")?, hyper.get("beta2")?);
        let g = problem.gradient(x);
        let m = state.vector("m")?.scale(b1).axpy(1.0 - b1, &g);
        let sq = if self.isotropic {
            Vector::filled(g.len(), g.dot(&g) / g.len() as f64)
        } else {
            g.zip_map(&g, |a, b| a * b)
        };
        let v2 = state.vector("v2")?.scale(b2).axpy(1.0 - b2, &sq);
        Ok(OracleOutput {
            input: Matrix::from_columns(&[&m.to_column(), &v2.to_column()])?,
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
        let (gamma, eps) = (hyper.get("gamma")?, hyper.get("eps")?);
        let m = oracle.input.column(0);
        let v2 = oracle.input.column(1);
        let dir = m.zip_map(&v2, |mi, vi| mi / (vi.sqrt() + eps));
        Ok(UpdateOutput {
            next_x: x.axpy(-gamma, &dir),
            step_size: gamma,
            curvature: Curvature::None,
            skipped: false,
        })
    }

    fn storage(&self, mut state: State, _x: &Vector, oracle: &OracleOutput, _update: &UpdateOutput) -> Result<State> {
        state.set_vector("m", Role::GradientLike, oracle.input.column(0));
        state.set_vector("v2", Role::SquaredGradientLike, oracle.input.column(1));
        Ok(state)
    }

    /// `γ̂ = λγ` under geometric scaling; no rule for rotations.
    fn adapt_hyper(&self, hyper: &Hyper, t: &ProblemTransform) -> Option<Hyper> {
        let gamma = hyper.get("gamma").ok()?;
        match t {
            ProblemTransform::Orthogonal(_) => None,
            ProblemTransform::GeometricScale(l) => Some(hyper.clone().with("gamma", l * gamma)),
            _ => Some(hyper.clone()),
        }
    }
}
