use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Objective, Problem, DEFAULT_INIT_STEP};
use crate::error::{Error, Result};
use crate::numerics::{solve, sym_eigen, Eager, Matrix, Rng, TensorOps, Vector};

/// `f(x) = ½·s·‖Ax − b‖²`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    terms: QuadraticTerms<Matrix>,
}

/// The constants of a quadratic, held as tensors of some backend, so the
/// objective can be evaluated (and differentiated) by generic code.
#[derive(Debug, Clone)]
pub struct QuadraticTerms<T> {
    pub a: T,
    pub at: T,
    pub b: T,
    pub scale: f64,
}

impl<T: Clone> QuadraticTerms<T> {
    pub fn value<O: TensorOps<T = T>>(&self, ops: &mut O, x: &T) -> T {
        let ax = ops.matmul(&self.a, x);
        let r = ops.sub(&ax, &self.b);
        let rr = ops.dot(&r, &r);
        ops.scale_const(&rr, 0.5 * self.scale)
    }

    pub fn gradient<O: TensorOps<T = T>>(&self, ops: &mut O, x: &T) -> T {
        let ax = ops.matmul(&self.a, x);
        let r = ops.sub(&ax, &self.b);
        let atr = ops.matmul(&self.at, &r);
        ops.scale_const(&atr, self.scale)
    }
}

impl Quadratic {
    pub fn new(a: Matrix, b: Vector, scale: f64) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::Shape(format!(
                "A is {:?} but b has length {}",
                a.shape(),
                b.len()
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("scale {scale} must be positive")));
        }
        Ok(Self {
            terms: QuadraticTerms {
                at: a.transpose(),
                a,
                b: b.to_column(),
                scale,
            },
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.terms.a
    }

    pub fn b(&self) -> Vector {
        self.terms.b.to_vector()
    }

    pub fn scale(&self) -> f64 {
        self.terms.scale
    }

    /// Same quadratic multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.terms.a.clone(), self.b(), self.terms.scale * lambda)
    }

    /// Constants registered with the given backend.
    pub fn terms_on<O: TensorOps>(&self, ops: &mut O) -> QuadraticTerms<O::T> {
        QuadraticTerms {
            a: ops.constant(self.terms.a.clone()),
            at: ops.constant(self.terms.at.clone()),
            b: ops.constant(self.terms.b.clone()),
            scale: self.terms.scale,
        }
    }

    /// Exact minimizer `A⁻¹b` (square, invertible `A`).
    pub fn minimizer(&self) -> Result<Vector> {
        solve(&self.terms.a, &self.b())
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.terms.a.cols()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.terms.value(&mut Eager, &x.to_column()).scalar_value()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.terms.gradient(&mut Eager, &x.to_column()).to_vector()
    }

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        Some(self.terms.at.matmul(&self.terms.a).scale(self.terms.scale))
    }

    fn as_quadratic(&self) -> Option<&Quadratic> {
        Some(self)
    }
}

/// Ranges the extreme eigenvalues of `A` are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub min_low: f64,
    pub min_high: f64,
    pub max_low: f64,
    pub max_high: f64,
}

impl Default for Spectrum {
    fn default() -> Self {
        Self {
            min_low: 0.1,
            min_high: 1.0,
            max_low: 1.0,
            max_high: 50.0,
        }
    }
}

/// Random ill-conditioned quadratic `½‖Ax − b‖²` with the default spectrum.
pub fn gen_quadratic(n: usize, rng: &mut Rng) -> Result<Problem> {
    gen_quadratic_with_spectrum(n, Spectrum::default(), rng)
}

/// `A = P D Pᵀ` with `λ_min ~ U[min_low, min_high]`, `λ_max ~ U[max_low,
/// max_high]`, the other `n − 2` eigenvalues uniform in between, `P` the
/// eigenvectors of a symmetrized Gaussian matrix and `b ~ U[0, 15]ⁿ`.
pub fn gen_quadratic_with_spectrum(n: usize, spec: Spectrum, rng: &mut Rng) -> Result<Problem> {
    if n < 2 {
        return Err(Error::Dimension(format!("quadratic needs n ≥ 2, got {n}")));
    }
    if !(spec.min_low > 0.0 && spec.min_low <= spec.min_high && spec.max_low <= spec.max_high)
        || spec.min_high > spec.max_low
    {
        return Err(Error::InvalidParameter(format!("bad spectrum {spec:?}")));
    }
    let mut gen = rng.split("quadratic");
    let lmin = gen.uniform(spec.min_low, spec.min_high);
    let lmax = gen.uniform(spec.max_low, spec.max_high);
    let mut eig = vec![lmin, lmax];
    for _ in 2..n {
        eig.push(gen.uniform(lmin, lmax));
    }
    let g = gen.normal_matrix(n, n);
    let p = sym_eigen(&g.add(&g.transpose()))?.vectors;
    let a = p
        .matmul(&Matrix::from_diag(&Vector::new(eig)))
        .matmul(&p.transpose())
        .symmetrized();
    let b = gen.uniform_vector(n, 0.0, 15.0);
    let quad = Quadratic::new(a, b, 1.0)?;
    let mut init = rng.split("init");
    Problem::with_random_init(
        Arc::new(quad),
        &mut init,
        DEFAULT_INIT_STEP,
        Some(0.0),
        format!("quadratic-n{n}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigen_bounds;
    use crate::problems::gradient_check;

    #[test]
    fn minimizer_has_zero_value() {
        let mut rng = Rng::new(3, "q");
        let p = gen_quadratic(6, &mut rng).unwrap();
        let q = p.as_quadratic().unwrap();
        assert!(p.value(&q.minimizer().unwrap()) < 1e-20);
    }

    #[test]
    fn spectrum_and_hessian_condition() {
        let mut rng = Rng::new(11, "q");
        for _ in 0..5 {
            let p = gen_quadratic(8, &mut rng).unwrap();
            let q = p.as_quadratic().unwrap();
            let (lo, hi) = eigen_bounds(q.a()).unwrap();
            assert!((0.1..=1.0 + 1e-12).contains(&lo), "lo {lo}");
            assert!((1.0 - 1e-12..=50.0).contains(&hi), "hi {hi}");
            let (hlo, hhi) = eigen_bounds(&p.hessian(&p.x0).unwrap().symmetrized()).unwrap();
            let expect = (hi / lo).powi(2);
            assert!(((hhi / hlo) - expect).abs() / expect < 1e-6);
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let mut rng = Rng::new(5, "q");
        let p = gen_quadratic(5, &mut rng).unwrap();
        let mut pts = Rng::new(5, "points");
        assert!(gradient_check(p.objective.as_ref(), &mut pts, 5).unwrap() < 1e-5);
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(matches!(
            gen_quadratic(1, &mut Rng::new(0, "q")),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn scaled_multiplies_value() {
        let p = gen_quadratic(4, &mut Rng::new(2, "q")).unwrap();
        let q = p.as_quadratic().unwrap().scaled(7.0).unwrap();
        let v = p.value(&p.x0);
        assert!((q.value(&p.x0) - 7.0 * v).abs() <= 1e-12 * v);
    }
}
