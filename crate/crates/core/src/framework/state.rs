use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::transform::ProblemTransform;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// How a state entry changes when the problem is transformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// Lives in the variable space: mapped like the iterates.
    PointLike,
    /// Mapped like a gradient.
    GradientLike,
    /// Element-wise square of a gradient-like vector.
    SquaredGradientLike,
    /// Mapped like an inverse Hessian.
    InverseHessianLike,
    /// No declared rule; transforming it is an error.
    Unspecified,
}

/// Named vectors and matrices carried from one iteration to the next.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    vectors: BTreeMap<String, (Role, Vector)>,
    matrices: BTreeMap<String, (Role, Matrix)>,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vector(mut self, name: &str, role: Role, v: Vector) -> Self {
        self.set_vector(name, role, v);
        self
    }

    pub fn with_matrix(mut self, name: &str, role: Role, m: Matrix) -> Self {
        self.set_matrix(name, role, m);
        self
    }

    pub fn set_vector(&mut self, name: &str, role: Role, v: Vector) {
        self.vectors.insert(name.to_string(), (role, v));
    }

    pub fn set_matrix(&mut self, name: &str, role: Role, m: Matrix) {
        self.matrices.insert(name.to_string(), (role, m));
    }

    pub fn vector(&self, name: &str) -> Result<&Vector> {
        self.vectors
            .get(name)
            .map(|(_, v)| v)
            .ok_or_else(|| Error::InvalidParameter(format!("state has no vector '{name}'")))
    }

    pub fn matrix(&self, name: &str) -> Result<&Matrix> {
        self.matrices
            .get(name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::InvalidParameter(format!("state has no matrix '{name}'")))
    }

    pub fn vector_names(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn matrix_names(&self) -> impl Iterator<Item = &str> {
        self.matrices.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty() && self.matrices.is_empty()
    }

    /// Maps every entry by the rule of its role.
    pub fn transformed(&self, t: &ProblemTransform) -> Result<State> {
        let mut out = State::new();
        for (name, (role, v)) in &self.vectors {
            let mapped = match role {
                Role::PointLike => t.point(v),
                Role::GradientLike => t.gradient(v),
                Role::SquaredGradientLike => t.squared_gradient(v),
                Role::InverseHessianLike | Role::Unspecified => {
                    return Err(Error::Role(name.clone()))
                }
            };
            out.set_vector(name, *role, mapped);
        }
        for (name, (role, m)) in &self.matrices {
            let mapped = match role {
                Role::InverseHessianLike => t.inverse_hessian(m),
                _ => return Err(Error::Role(name.clone())),
            };
            out.set_matrix(name, *role, mapped);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undeclared_roles_rejected() {
        let s = State::new().with_vector("v", Role::Unspecified, Vector::zeros(2));
        let t = ProblemTransform::GeometricScale(2.0);
        assert!(matches!(s.transformed(&t), Err(Error::Role(name)) if name == "v"));
        let s = State::new().with_matrix("m", Role::PointLike, Matrix::identity(2));
        assert!(matches!(s.transformed(&t), Err(Error::Role(_))));
    }

    #[test]
    fn roles_follow_their_rules() {
        let s = State::new()
            .with_vector("x", Role::PointLike, Vector::from_slice(&[1.0, 2.0]))
            .with_vector("g", Role::GradientLike, Vector::from_slice(&[4.0, 8.0]))
            .with_matrix("b", Role::InverseHessianLike, Matrix::identity(2));
        let t = ProblemTransform::GeometricScale(2.0);
        let u = s.transformed(&t).unwrap();
        assert_eq!(u.vector("x").unwrap().as_slice(), &[2.0, 4.0]);
        assert_eq!(u.vector("g").unwrap().as_slice(), &[2.0, 4.0]);
        assert_eq!(u.matrix("b").unwrap(), &Matrix::scaled_identity(2, 4.0));
    }
}
