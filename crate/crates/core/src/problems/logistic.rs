use std::sync::Arc;

use super::{Dataset, Objective, Problem, DEFAULT_INIT_STEP};
use crate::error::{Error, Result};
use crate::numerics::{solve, Matrix, Rng, Vector};

/// Regularized logistic regression
/// `f(x) = (1/N)·Σᵢ [log(1 + exp(aᵢᵀx)) − bᵢ·aᵢᵀx] + (η/2)‖x‖²`.
#[derive(Debug, Clone)]
pub struct Logistic {
    features: Matrix,
    labels: Vector,
    eta: f64,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn new(data: &Dataset, eta: f64) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::InvalidParameter(format!("η = {eta} must be non-negative")));
        }
        if data.rows() == 0 {
            return Err(Error::Dimension("logistic regression on an empty dataset".into()));
        }
        if data.labels.len() != data.rows() {
            return Err(Error::Shape("label count differs from row count".into()));
        }
        if data.labels.iter().any(|&b| b != 0.0 && b != 1.0) {
            return Err(Error::InvalidParameter("logistic labels must be 0 or 1".into()));
        }
        Ok(Self {
            features: data.features.clone(),
            labels: data.labels.clone(),
            eta,
        })
    }

    pub fn samples(&self) -> usize {
        self.features.rows()
    }

    fn margins(&self, x: &Vector) -> Vector {
        self.features.matvec(x)
    }
}

impl Objective for Logistic {
    fn dim(&self) -> usize {
        self.features.cols()
    }

    fn value(&self, x: &Vector) -> f64 {
        let z = self.margins(x);
        let mut acc = 0.0;
        for (zi, bi) in z.iter().zip(self.labels.iter()) {
            acc += softplus(*zi) - bi * zi;
        }
        acc / self.samples() as f64 + 0.5 * self.eta * x.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let z = self.margins(x);
        let resid = z.zip_map(&self.labels, |zi, bi| sigmoid(zi) - bi);
        let g = self.features.transpose().matvec(&resid);
        g.scale(1.0 / self.samples() as f64).axpy(self.eta, x)
    }

    fn hessian(&self, x: &Vector) -> Option<Matrix> {
        let z = self.margins(x);
        let n = self.dim();
        let inv_n = 1.0 / self.samples() as f64;
        let mut h = Matrix::scaled_identity(n, self.eta);
        for (i, zi) in z.iter().enumerate() {
            let s = sigmoid(*zi);
            let w = s * (1.0 - s) * inv_n;
            let row = self.features.row(i);
            for p in 0..n {
                let wp = w * row[p];
                if wp == 0.0 {
                    continue;
                }
                for q in 0..n {
                    h[(p, q)] += wp * row[q];
                }
            }
        }
        Some(h)
    }
}

/// Damped Newton with Armijo backtracking until `‖∇f‖ ≤ tol`. Returns the
/// minimizer and the minimum value.
pub(crate) fn newton_minimize(obj: &dyn Objective, start: Vector, tol: f64) -> Result<(Vector, f64)> {
    let mut x = start;
    let mut f = obj.value(&x);
    for _ in 0..200 {
        let g = obj.gradient(&x);
        if g.norm() <= tol {
            return Ok((x, f));
        }
        let h = obj
            .hessian(&x)
            .ok_or_else(|| Error::Capability("reference solve needs a Hessian".into()))?;
        let step = solve(&h, &g)?;
        let slope = -g.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = x.axpy(-t, &step);
            let ft = obj.value(&trial);
            if ft <= f + 1e-4 * t * slope {
                moved = trial != x;
                x = trial;
                f = ft;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // Rounding floor: no representable decrease left.
            break;
        }
    }
    let gn = obj.gradient(&x).norm();
    if gn <= tol.max(1e-9) {
        Ok((x, f))
    } else {
        Err(Error::Eval(format!("reference Newton solve stalled at gradient norm {gn:e}")))
    }
}

/// Two unit-variance Gaussian clouds of `m_per_class` points in `ℝⁿ` with
/// mean vectors drawn from `N(−1, 1)` and `N(1, 1)`, a ones column
/// appended (so the variable has `n + 1` coordinates), labels 0 and 1.
pub fn gen_logistic_synthetic(n: usize, m_per_class: usize, eta: f64, rng: &mut Rng) -> Result<Problem> {
    if n < 1 || m_per_class < 1 {
        return Err(Error::Dimension(format!("n = {n}, M = {m_per_class} must be ≥ 1")));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("η = {eta} must be positive")));
    }
    let mut gen = rng.split("logistic");
    let mu0: Vec<f64> = (0..n).map(|_| gen.normal(-1.0, 1.0)).collect();
    let mu1: Vec<f64> = (0..n).map(|_| gen.normal(1.0, 1.0)).collect();
    let mut rows = Vec::with_capacity(2 * m_per_class);
    let mut labels = Vec::with_capacity(2 * m_per_class);
    for (label, mu) in [(0.0, &mu0), (1.0, &mu1)] {
        for _ in 0..m_per_class {
            let mut row: Vec<f64> = mu.iter().map(|m| m + gen.standard_normal()).collect();
            row.push(1.0);
            rows.push(row);
            labels.push(label);
        }
    }
    let data = Dataset {
        features: Matrix::from_rows(&rows)?,
        labels: Vector::new(labels),
    };
    logistic_problem(&data, eta, rng, format!("logistic-n{n}-m{m_per_class}"))
}

/// Logistic problem on `data` (used as given) with random init pair and a
/// reference minimum.
pub(crate) fn logistic_problem(data: &Dataset, eta: f64, rng: &mut Rng, label: String) -> Result<Problem> {
    let obj = Logistic::new(data, eta)?;
    let (_, f_star) = newton_minimize(&obj, Vector::zeros(obj.dim()), 1e-12)?;
    let mut init = rng.split("init");
    Problem::with_random_init(Arc::new(obj), &mut init, DEFAULT_INIT_STEP, Some(f_star), label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_grad;
    use crate::problems::gradient_check;

    #[test]
    fn defaults_shape() {
        let p = gen_logistic_synthetic(50, 100, 1e-3, &mut Rng::new(0, "log")).unwrap();
        assert_eq!(p.dim(), 51);
        let fs = p.f_star.unwrap();
        assert!(fs <= p.value(&p.x0));
        assert!(p.gradient(&p.x0).is_finite());
    }

    #[test]
    fn gradient_matches_differences() {
        let p = gen_logistic_synthetic(5, 20, 1e-2, &mut Rng::new(1, "log")).unwrap();
        let mut pts = Rng::new(1, "pts");
        assert!(gradient_check(p.objective.as_ref(), &mut pts, 5).unwrap() < 1e-5);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let p = gen_logistic_synthetic(3, 10, 1e-2, &mut Rng::new(2, "log")).unwrap();
        let x = Rng::new(2, "x").normal_vector(4);
        let h = p.hessian(&x).unwrap();
        for j in 0..4 {
            let col = finite_diff_grad(|v| p.gradient(v)[j], &x, 1e-6).unwrap();
            for i in 0..4 {
                assert!((h[(i, j)] - col[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn heavy_regularization_pins_minimum_at_origin() {
        let p = gen_logistic_synthetic(4, 30, 1e8, &mut Rng::new(3, "log")).unwrap();
        let fs = p.f_star.unwrap();
        assert!((fs - std::f64::consts::LN_2).abs() < 1e-6, "f* = {fs}");
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn rejects_non_binary_labels() {
        let d = Dataset {
            features: Matrix::identity(2),
            labels: Vector::from_slice(&[0.0, 2.0]),
        };
        assert!(Logistic::new(&d, 1e-3).is_err());
    }
}
