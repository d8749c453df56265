//! Problem transformations `T` and the induced maps on points, gradients,
//! Hessians and inverse-Hessian-like matrices.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::state::State;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Vector};
use crate::problems::{Objective, Problem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProblemTransform {
    /// `x̂ = x + v`.
    Translation(Vector),
    /// `x̂ᵢ = x_{π(i)}`.
    Permutation(Vec<usize>),
    /// `x̂ = Q x` with `QᵀQ = I`.
    Orthogonal(Matrix),
    /// `x̂ = λ x`, `λ > 0`.
    GeometricScale(f64),
    /// `f̂ = λ f`, points unchanged.
    FunctionScale(f64),
}

impl ProblemTransform {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Translation(_) => "translation",
            Self::Permutation(_) => "permutation",
            Self::Orthogonal(_) => "orthogonal",
            Self::GeometricScale(_) => "geometric_scale",
            Self::FunctionScale(_) => "function_scale",
        }
    }

    pub fn random_translation(n: usize, rng: &mut Rng) -> Self {
        Self::Translation(rng.normal_vector(n).scale(3.0))
    }

    pub fn random_permutation(n: usize, rng: &mut Rng) -> Self {
        Self::Permutation(rng.permutation(n))
    }

    /// Product of `n` Householder reflections with Gaussian normals.
    pub fn random_orthogonal(n: usize, rng: &mut Rng) -> Self {
        let mut q = Matrix::identity(n);
        for _ in 0..n {
            let v = rng.normal_vector(n);
            let h = Matrix::identity(n).sub(&Matrix::outer(&v, &v).scale(2.0 / v.dot(&v)));
            q = h.matmul(&q);
        }
        Self::Orthogonal(q)
    }

    /// Dimension constraint, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Translation(v) => Some(v.len()),
            Self::Permutation(p) => Some(p.len()),
            Self::Orthogonal(q) => Some(q.rows()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Permutation(p) => {
                let mut seen = vec![false; p.len()];
                for &i in p {
                    if i >= p.len() || std::mem::replace(&mut seen[i], true) {
                        return Err(Error::InvalidParameter(format!("{p:?} is not a permutation")));
                    }
                }
            }
            Self::Orthogonal(q) => {
                let dev = q.transpose().matmul(q).sub(&Matrix::identity(q.rows())).max_abs();
                if !q.is_square() || dev > 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not orthogonal (‖QᵀQ − I‖ = {dev:e})"
                    )));
                }
            }
            Self::GeometricScale(l) | Self::FunctionScale(l) => {
                if !(*l > 0.0) || !l.is_finite() {
                    return Err(Error::InvalidParameter(format!("scale {l} must be positive")));
                }
            }
            Self::Translation(v) => {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter("non-finite translation".into()));
                }
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        match self {
            Self::Translation(v) => Self::Translation(v.scale(-1.0)),
            Self::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (i, &pi) in p.iter().enumerate() {
                    inv[pi] = i;
                }
                Self::Permutation(inv)
            }
            Self::Orthogonal(q) => Self::Orthogonal(q.transpose()),
            Self::GeometricScale(l) => Self::GeometricScale(1.0 / l),
            Self::FunctionScale(l) => Self::FunctionScale(1.0 / l),
        }
    }

    fn permute(p: &[usize], v: &Vector) -> Vector {
        Vector::new(p.iter().map(|&i| v[i]).collect())
    }

    fn permute_matrix(p: &[usize], m: &Matrix) -> Matrix {
        let n = p.len();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = m[(p[i], p[j])];
            }
        }
        out
    }

    /// `T(x)`.
    pub fn point(&self, x: &Vector) -> Vector {
        match self {
            Self::Translation(v) => x.add(v),
            Self::Permutation(p) => Self::permute(p, x),
            Self::Orthogonal(q) => q.matvec(x),
            Self::GeometricScale(l) => x.scale(*l),
            Self::FunctionScale(_) => x.clone(),
        }
    }

    /// `T⁻¹(x̂)`.
    pub fn inverse_point(&self, x: &Vector) -> Vector {
        self.inverse().point(x)
    }

    /// `∇f̂(T x)` from `∇f(x)`.
    pub fn gradient(&self, g: &Vector) -> Vector {
        match self {
            Self::Translation(_) => g.clone(),
            Self::Permutation(p) => Self::permute(p, g),
            Self::Orthogonal(q) => q.matvec(g),
            Self::GeometricScale(l) => g.scale(1.0 / l),
            Self::FunctionScale(l) => g.scale(*l),
        }
    }

    /// Image of an element-wise squared gradient. Exact except for
    /// orthogonal maps, where `(Q∘Q)v` is used (exact for the zero state).
    pub fn squared_gradient(&self, v: &Vector) -> Vector {
        match self {
            Self::Translation(_) => v.clone(),
            Self::Permutation(p) => Self::permute(p, v),
            Self::Orthogonal(q) => q.map(|x| x * x).matvec(v),
            Self::GeometricScale(l) => v.scale(1.0 / (l * l)),
            Self::FunctionScale(l) => v.scale(l * l),
        }
    }

    /// `∇²f̂(T x)` from `∇²f(x)`.
    pub fn hessian(&self, h: &Matrix) -> Matrix {
        match self {
            Self::Translation(_) => h.clone(),
            Self::Permutation(p) => Self::permute_matrix(p, h),
            Self::Orthogonal(q) => q.matmul(h).matmul(&q.transpose()),
            Self::GeometricScale(l) => h.scale(1.0 / (l * l)),
            Self::FunctionScale(l) => h.scale(*l),
        }
    }

    /// Image of an inverse-Hessian-like matrix.
    pub fn inverse_hessian(&self, b: &Matrix) -> Matrix {
        match self {
            Self::Translation(_) => b.clone(),
            Self::Permutation(p) => Self::permute_matrix(p, b),
            Self::Orthogonal(q) => q.matmul(b).matmul(&q.transpose()),
            Self::GeometricScale(l) => b.scale(l * l),
            Self::FunctionScale(l) => b.scale(1.0 / l),
        }
    }

    /// Image of a function value.
    pub fn value(&self, f: f64) -> f64 {
        match self {
            Self::FunctionScale(l) => l * f,
            _ => f,
        }
    }
}

/// `f̂ = f ∘ T⁻¹` (or `λ f` for function scaling).
#[derive(Debug, Clone)]
pub struct TransformedObjective {
    inner: Arc<dyn Objective>,
    t: ProblemTransform,
    inv: ProblemTransform,
}

impl TransformedObjective {
    pub fn new(inner: Arc<dyn Objective>, t: ProblemTransform) -> Self {
        let inv = t.inverse();
        Self { inner, t, inv }
    }
}

impl Objective for TransformedObjective {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.t.value(self.inner.value(&self.inv.point(x)))
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.t.gradient(&self.inner.gradient(&self.inv.point(x)))
    }

    fn hessian(&self, x: &Vector) -> Option<Matrix> {
        self.inner
            .hessian(&self.inv.point(x))
            .map(|h| self.t.hessian(&h))
    }
}

/// The transformed problem and initial state: `f̂`, `x̂₋₁ = T(x₋₁)`,
/// `x̂₀ = T(x₀)`, `f̂* ` and every state entry mapped by its role.
pub fn transform_problem(t: &ProblemTransform, problem: &Problem, s0: &State) -> Result<(Problem, State)> {
    t.validate()?;
    if let Some(n) = t.dim() {
        if n != problem.dim() {
            return Err(Error::Dimension(format!(
                "{} transform of dimension {n} on a {}-dimensional problem",
                t.kind(),
                problem.dim()
            )));
        }
    }
    let obj = TransformedObjective::new(problem.objective.clone(), t.clone());
    let p = Problem::new(
        Arc::new(obj),
        t.point(&problem.x_prev),
        t.point(&problem.x0),
        problem.f_star.map(|f| t.value(f)),
        format!("{}/{}", problem.label, t.kind()),
    )?;
    Ok((p, s0.transformed(t)?))
}
