use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::state::State;
use super::transform::ProblemTransform;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};
use crate::problems::Problem;

/// Named scalar hyper-parameters `Γ`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hyper(BTreeMap<String, f64>);

impl Hyper {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.0
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("missing hyper-parameter '{name}'")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Output of the oracle `C`.
#[derive(Debug, Clone)]
pub struct OracleOutput {
    /// Model input `I_k`, shape `n × n_i`.
    pub input: Matrix,
    pub gradient: Vector,
    /// Intermediate quantities the update reuses.
    pub aux: Vec<Matrix>,
}

/// Curvature information for the convergence monitor.
#[derive(Debug, Clone)]
pub enum Curvature {
    None,
    /// Eigenvalue bounds known in closed form.
    Bounds(f64, f64),
    /// The preconditioner `B_k` itself.
    Matrix(Matrix),
}

/// Output of the update `U`.
#[derive(Debug, Clone)]
pub struct UpdateOutput {
    pub next_x: Vector,
    pub step_size: f64,
    pub curvature: Curvature,
    /// The matrix update was skipped by a safeguard.
    pub skipped: bool,
}

/// One iterative method in oracle / model / update / storage form.
pub trait AlgorithmSpec: Send + Sync {
    fn name(&self) -> &str;

    /// Number of oracle columns `n_i`; never depends on the dimension.
    fn input_width(&self) -> usize;

    fn default_hyper(&self) -> Hyper;

    /// `S₀` for `problem`.
    fn initial_state(&self, problem: &Problem, hyper: &Hyper) -> Result<State>;

    fn oracle(&self, problem: &Problem, x: &Vector, state: &State, hyper: &Hyper) -> Result<OracleOutput>;

    /// `M_θ(I_k)`; `None` for methods without a model.
    fn model(&self, input: &Matrix) -> Result<Option<Vector>>;

    fn update(
        &self,
        problem: &Problem,
        x: &Vector,
        oracle: &OracleOutput,
        prediction: Option<&Vector>,
        state: &State,
        hyper: &Hyper,
    ) -> Result<UpdateOutput>;

    fn storage(&self, state: State, x: &Vector, oracle: &OracleOutput, update: &UpdateOutput) -> Result<State>;

    /// Hyper-parameters that make the method equivariant under `t`, when a
    /// rule exists.
    fn adapt_hyper(&self, _hyper: &Hyper, _t: &ProblemTransform) -> Option<Hyper> {
        None
    }
}
