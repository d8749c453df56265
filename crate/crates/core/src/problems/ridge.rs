use std::sync::Arc;

use super::{Dataset, Objective, Problem, DEFAULT_INIT_STEP};
use crate::error::{Error, Result};
use crate::numerics::{solve, Matrix, Rng, Vector};

/// `f(x) = ‖Ax − b‖² + (λ/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct Ridge {
    a: Matrix,
    at: Matrix,
    b: Vector,
    lambda: f64,
}

impl Ridge {
    pub fn new(data: &Dataset, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("λ = {lambda} must be non-negative")));
        }
        if data.labels.len() != data.rows() {
            return Err(Error::Shape("label count differs from row count".into()));
        }
        Ok(Self {
            a: data.features.clone(),
            at: data.features.transpose(),
            b: data.labels.clone(),
            lambda,
        })
    }

    /// Solves `(2AᵀA + λI) x = 2Aᵀb`.
    pub fn minimizer(&self) -> Result<Vector> {
        let n = self.dim();
        let h = self
            .at
            .matmul(&self.a)
            .scale(2.0)
            .add(&Matrix::scaled_identity(n, self.lambda));
        solve(&h, &self.at.matvec(&self.b).scale(2.0))
    }
}

impl Objective for Ridge {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &Vector) -> f64 {
        let r = self.a.matvec(x).sub(&self.b);
        r.dot(&r) + 0.5 * self.lambda * x.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let r = self.a.matvec(x).sub(&self.b);
        self.at.matvec(&r).scale(2.0).axpy(self.lambda, x)
    }

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        let n = self.dim();
        Some(
            self.at
                .matmul(&self.a)
                .scale(2.0)
                .add(&Matrix::scaled_identity(n, self.lambda)),
        )
    }
}

/// Ridge problem with the exact minimum value and a random init pair drawn
/// from `rng`.
pub fn make_ridge(data: &Dataset, lambda: f64, rng: &mut Rng) -> Result<Problem> {
    let obj = Ridge::new(data, lambda)?;
    let x_star = obj.minimizer()?;
    let f_star = obj.value(&x_star);
    let mut init = rng.split("init");
    Problem::with_random_init(
        Arc::new(obj),
        &mut init,
        DEFAULT_INIT_STEP,
        Some(f_star),
        format!("ridge-m{}-d{}", data.rows(), data.cols()),
    )
}
