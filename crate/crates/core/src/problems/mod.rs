//! Objectives, synthetic generators and dataset loaders.

mod csv;
mod init;
mod libsvm;
mod logistic;
mod manifest;
mod quadratic;
mod ridge;

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{finite_diff_grad, Matrix, Rng, Vector};

pub use self::csv::parse_csv_numeric;
pub use init::{make_init_pair, DEFAULT_INIT_STEP};
pub use libsvm::{parse_libsvm, serialize_libsvm};
pub use logistic::{gen_logistic_synthetic, Logistic};
pub use manifest::{ManifestEntry, ProblemKind, ProblemManifest};
pub use quadratic::{gen_quadratic, gen_quadratic_with_spectrum, Quadratic, QuadraticTerms, Spectrum};
pub use ridge::{make_ridge, Ridge};

/// A smooth objective with a gradient oracle.
pub trait Objective: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        None
    }

    /// Closed form, when the objective is a plain quadratic. Unrolled
    /// training only runs on these.
    fn as_quadratic(&self) -> Option<&Quadratic> {
        None
    }
}

/// An objective together with its initialization pair and reference minimum.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Arc<dyn Objective>,
    pub x_prev: Vector,
    pub x0: Vector,
    pub f_star: Option<f64>,
    pub label: String,
}

impl Problem {
    pub fn new(
        objective: Arc<dyn Objective>,
        x_prev: Vector,
        x0: Vector,
        f_star: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = objective.dim();
        if x_prev.len() != n || x0.len() != n {
            return Err(Error::Shape(format!(
                "initialization pair of lengths ({}, {}) for a {n}-dimensional objective",
                x_prev.len(),
                x0.len()
            )));
        }
        Ok(Self {
            objective,
            x_prev,
            x0,
            f_star,
            label: label.into(),
        })
    }

    /// Draws the initialization pair from `rng` (see [`make_init_pair`]).
    pub fn with_random_init(
        objective: Arc<dyn Objective>,
        rng: &mut Rng,
        init_step: f64,
        f_star: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let (x_prev, x0) = make_init_pair(objective.as_ref(), rng, init_step)?;
        Self::new(objective, x_prev, x0, f_star, label)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.objective.gradient(x)
    }

    pub fn hessian(&self, x: &Vector) -> Option<Matrix> {
        self.objective.hessian(x)
    }

    pub fn as_quadratic(&self) -> Option<&Quadratic> {
        self.objective.as_quadratic()
    }

    /// `f(x) − f*`, or `None` without a known minimum.
    pub fn gap(&self, x: &Vector) -> Option<f64> {
        self.f_star.map(|fs| self.value(x) - fs)
    }

    /// Largest eigenvalue of the Hessian at `x0` (the global constant for
    /// quadratics).
    pub fn lipschitz(&self) -> Option<f64> {
        let h = self.hessian(&self.x0)?;
        crate::numerics::eigen_bounds(&h.symmetrized()).ok().map(|b| b.1)
    }

    pub fn with_init(&self, x_prev: Vector, x0: Vector) -> Result<Self> {
        Self::new(self.objective.clone(), x_prev, x0, self.f_star, self.label.clone())
    }
}

/// Features and labels of a dense dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vector,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn cols(&self) -> usize {
        self.features.cols()
    }

    /// Copy with an all-ones column appended.
    pub fn with_ones_column(&self) -> Dataset {
        let ones = Matrix::from_vec(self.rows(), 1, vec![1.0; self.rows()]);
        Dataset {
            features: Matrix::from_columns(&[&self.features, &ones]).expect("row counts agree"),
            labels: self.labels.clone(),
        }
    }
}

/// Largest relative error between the analytic gradient and central
/// differences over `points` random standard-normal points.
pub fn gradient_check(objective: &dyn Objective, rng: &mut Rng, points: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = rng.normal_vector(objective.dim());
        let g = objective.gradient(&x);
        let fd = finite_diff_grad(|v| objective.value(v), &x, 1e-6)?;
        let err = g.sub(&fd).norm() / g.norm().max(fd.norm()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}
