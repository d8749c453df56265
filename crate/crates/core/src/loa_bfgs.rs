//! The learned quasi-Newton method.
//!
//! State `{x_{k−1}, ∇f(x_{k−1}), B_{k−1}}`; oracle
//! `I_k = (B_{k−1}Δg_k, d_k, −γB_{k−1}∇f(x_k))`; the model predicts `y_k`;
//! the update is the symmetric rank-two correction
//!
//! `B_k = B_{k−1} + [r yᵀ + y rᵀ − (⟨Δg,r⟩/⟨Δg,y⟩) y yᵀ] / ⟨Δg,y⟩`,
//! `r = d − B_{k−1}Δg`,
//!
//! followed by `x_{k+1} = x_k − γB_k∇f(x_k)`. With `y_k = d_k` this is the
//! BFGS inverse update. The arithmetic is written once against
//! [`TensorOps`] so evaluation and unrolled training share it exactly.

use serde::{Deserialize, Serialize};

use crate::baselines::line_search::{searched_step, LineSearchConfig};
use crate::error::{Error, Result};
use crate::framework::{
    run, AlgorithmSpec, Curvature, Hyper, OracleOutput, ProblemTransform, Role, State, Trajectory, UpdateOutput,
};
use crate::loa_model::{self, ModelWeights};
use crate::numerics::{Eager, Matrix, TensorOps, Vector};
use crate::problems::Problem;

pub const DEFAULT_GAMMA: f64 = 1.0;
/// `B₋₁ = BB_INIT_FACTOR·γ_BB·I`.
pub const BB_INIT_FACTOR: f64 = 0.8;

/// Safeguards around the rank-two update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateGuards {
    /// The update is skipped when `|⟨Δg,y⟩| ≤ curvature_tol·‖Δg‖·‖y‖`.
    pub curvature_tol: f64,
    pub symmetrize: bool,
}

impl Default for UpdateGuards {
    fn default() -> Self {
        Self {
            curvature_tol: 1e-10,
            symmetrize: true,
        }
    }
}

/// Barzilai–Borwein initialization of the inverse-Hessian estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct BbInit {
    pub b: Matrix,
    pub gamma_bb: f64,
    /// Set when `γ_BB ≤ 0` and its absolute value was used instead.
    pub warning: Option<String>,
}

/// `γ_BB = ⟨Δg₀, d₀⟩/‖Δg₀‖²` and `B₋₁ = 0.8·γ_BB·I`.
pub fn bb_init(x_prev: &Vector, x0: &Vector, g_prev: &Vector, g0: &Vector) -> Result<BbInit> {
    let dg = g0.sub(g_prev);
    let d = x0.sub(x_prev);
    let nrm = dg.norm();
    if !(nrm >= 1e-30) {
        return Err(Error::StationaryStart(nrm));
    }
    let gamma_bb = dg.dot(&d) / dg.dot(&dg);
    let (scale, warning) = if gamma_bb > 0.0 {
        (gamma_bb, None)
    } else {
        (
            gamma_bb.abs(),
            Some(format!("non-positive Barzilai–Borwein step {gamma_bb:e}; using its magnitude")),
        )
    };
    Ok(BbInit {
        b: Matrix::scaled_identity(x0.len(), BB_INIT_FACTOR * scale),
        gamma_bb,
        warning,
    })
}

/// Oracle quantities: `Δg_k`, `d_k`, `B_{k−1}Δg_k` and the input `I_k`.
#[derive(Debug, Clone)]
pub struct QnFeatures<T> {
    pub dg: T,
    pub d: T,
    pub bdg: T,
    pub input: T,
}

pub fn qn_features<O: TensorOps>(
    ops: &mut O,
    b_prev: &O::T,
    x: &O::T,
    x_prev: &O::T,
    g: &O::T,
    g_prev: &O::T,
    gamma: f64,
) -> QnFeatures<O::T> {
    let dg = ops.sub(g, g_prev);
    let d = ops.sub(x, x_prev);
    let bdg = ops.matmul(b_prev, &dg);
    let bg = ops.matmul(b_prev, g);
    let c3 = ops.scale_const(&bg, -gamma);
    let input = ops.concat_cols(&[bdg.clone(), d.clone(), c3]);
    QnFeatures { dg, d, bdg, input }
}

fn norm_of(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Rank-two update driven by `y`. Returns `B_k` and whether the curvature
/// guard skipped the update (then `B_k = B_{k−1}`).
pub fn qn_update<O: TensorOps>(
    ops: &mut O,
    b_prev: &O::T,
    dg: &O::T,
    d: &O::T,
    bdg: &O::T,
    y: &O::T,
    guards: &UpdateGuards,
) -> (O::T, bool) {
    let dgy = ops.dot(dg, y);
    let scale = guards.curvature_tol * norm_of(ops.value(dg)) * norm_of(ops.value(y));
    if ops.scalar(&dgy).abs() <= scale {
        return (b_prev.clone(), true);
    }
    let r = ops.sub(d, bdg);
    let inv = ops.recip(&dgy);
    let dgr = ops.dot(dg, &r);
    let c = ops.mul(&dgr, &inv);
    let ry = ops.outer(&r, y);
    let yr = ops.outer(y, &r);
    let yy = ops.outer(y, y);
    let sym = ops.add(&ry, &yr);
    let cyy = ops.scale(&yy, &c);
    let m = ops.sub(&sym, &cyy);
    let corr = ops.scale(&m, &inv);
    let mut b = ops.add(b_prev, &corr);
    if guards.symmetrize {
        let bt = ops.transpose(&b);
        let s = ops.add(&b, &bt);
        b = ops.scale_const(&s, 0.5);
    }
    (b, false)
}

/// `x_{k+1} = x_k − γB_k∇f(x_k)`.
pub fn qn_step<O: TensorOps>(ops: &mut O, x: &O::T, b: &O::T, g: &O::T, gamma: f64) -> O::T {
    let p = ops.matmul(b, g);
    let sp = ops.scale_const(&p, gamma);
    ops.sub(x, &sp)
}

/// Source of `y_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    /// `y_k = d_k`: classical BFGS.
    Secant,
    Learned(ModelWeights),
}

/// The quasi-Newton method as an [`AlgorithmSpec`]; hyper-parameter
/// `gamma`.
#[derive(Debug, Clone)]
pub struct QuasiNewtonSpec {
    pub predictor: Predictor,
    pub gamma: f64,
    pub ls: LineSearchConfig,
    pub guards: UpdateGuards,
}

impl QuasiNewtonSpec {
    pub fn classical(gamma: f64, ls: LineSearchConfig) -> Self {
        Self {
            predictor: Predictor::Secant,
            gamma,
            ls,
            guards: UpdateGuards::default(),
        }
    }

    pub fn learned(weights: ModelWeights, gamma: f64, ls: LineSearchConfig) -> Self {
        Self {
            predictor: Predictor::Learned(weights),
            gamma,
            ls,
            guards: UpdateGuards::default(),
        }
    }
}

/// `I_k` for the current iterate.
pub fn oracle_c(problem: &Problem, x: &Vector, state: &State, gamma: f64) -> Result<OracleOutput> {
    let g = problem.gradient(x);
    if !g.is_finite() {
        return Err(Error::Eval(format!("gradient of '{}'", problem.label)));
    }
    let f = qn_features(
        &mut Eager,
        state.matrix("b")?,
        &x.to_column(),
        &state.vector("x_prev")?.to_column(),
        &g.to_column(),
        &state.vector("g_prev")?.to_column(),
        gamma,
    );
    Ok(OracleOutput {
        input: f.input,
        gradient: g,
        aux: vec![f.dg, f.d, f.bdg],
    })
}

/// `B_k` and `x_{k+1}` from the oracle output and the prediction `y_k`.
pub fn update_u(
    problem: &Problem,
    x: &Vector,
    oracle: &OracleOutput,
    y: &Vector,
    state: &State,
    gamma: f64,
    guards: &UpdateGuards,
    ls: &LineSearchConfig,
) -> Result<UpdateOutput> {
    if y.len() != x.len() {
        return Err(Error::Shape(format!("prediction of length {} for n = {}", y.len(), x.len())));
    }
    let [dg, d, bdg] = &oracle.aux[..] else {
        return Err(Error::Shape("oracle output lacks Δg, d, BΔg".into()));
    };
    let (b, skipped) = qn_update(&mut Eager, state.matrix("b")?, dg, d, bdg, &y.to_column(), guards);
    let g = oracle.gradient.to_column();
    let (next_x, step_size) = if ls.enabled {
        let dir = b.matmul(&g).to_vector().scale(-1.0);
        searched_step(problem, x, &oracle.gradient, &dir, ls)?
    } else {
        (qn_step(&mut Eager, &x.to_column(), &b, &g, gamma).to_vector(), gamma)
    };
    Ok(UpdateOutput {
        next_x,
        step_size,
        curvature: Curvature::Matrix(b),
        skipped,
    })
}

impl AlgorithmSpec for QuasiNewtonSpec {
    fn name(&self) -> &str {
        match self.predictor {
            Predictor::Secant => "bfgs",
            Predictor::Learned(_) => "loa-bfgs",
        }
    }

    fn input_width(&self) -> usize {
        loa_model::INPUT_WIDTH
    }

    fn default_hyper(&self) -> Hyper {
        Hyper::new().with("gamma", self.gamma)
    }

    fn initial_state(&self, problem: &Problem, _hyper: &Hyper) -> Result<State> {
        let g_prev = problem.gradient(&problem.x_prev);
        let g0 = problem.gradient(&problem.x0);
        let init = bb_init(&problem.x_prev, &problem.x0, &g_prev, &g0)?;
        Ok(State::new()
            .with_vector("x_prev", Role::PointLike, problem.x_prev.clone())
            .with_vector("g_prev", Role::GradientLike, g_prev)
            .with_matrix("b", Role::InverseHessianLike, init.b))
    }

    fn oracle(&self, problem: &Problem, x: &Vector, state: &State, hyper: &Hyper) -> Result<OracleOutput> {
        oracle_c(problem, x, state, hyper.get("gamma")?)
    }

    fn model(&self, input: &Matrix) -> Result<Option<Vector>> {
        Ok(Some(match &self.predictor {
            Predictor::Secant => input.column(1),
            Predictor::Learned(w) => loa_model::forward(w, input)?,
        }))
    }

    fn update(
        &self,
        problem: &Problem,
        x: &Vector,
        oracle: &OracleOutput,
        prediction: Option<&Vector>,
        state: &State,
        hyper: &Hyper,
    ) -> Result<UpdateOutput> {
        let y = prediction.ok_or_else(|| Error::Shape("quasi-Newton update needs y_k".into()))?;
        update_u(problem, x, oracle, y, state, hyper.get("gamma")?, &self.guards, &self.ls)
    }

    fn storage(&self, mut state: State, x: &Vector, oracle: &OracleOutput, update: &UpdateOutput) -> Result<State> {
        let Curvature::Matrix(b) = &update.curvature else {
            return Err(Error::Shape("quasi-Newton update did not return B_k".into()));
        };
        state.set_vector("x_prev", Role::PointLike, x.clone());
        state.set_vector("g_prev", Role::GradientLike, oracle.gradient.clone());
        state.set_matrix("b", Role::InverseHessianLike, b.clone());
        Ok(state)
    }

    fn adapt_hyper(&self, hyper: &Hyper, _t: &ProblemTransform) -> Option<Hyper> {
        Some(hyper.clone())
    }
}

/// Runs the learned method for `k` iterations from the problem's init pair.
pub fn run_learned(
    problem: &Problem,
    weights: &ModelWeights,
    k: usize,
    gamma: f64,
    ls: LineSearchConfig,
) -> Result<Trajectory> {
    let spec = QuasiNewtonSpec::learned(weights.clone(), gamma, ls);
    let hyper = spec.default_hyper();
    let s0 = spec.initial_state(problem, &hyper)?;
    run(&spec, problem, s0, k, &hyper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn bb_hand_example() {
        let init = bb_init(
            &Vector::from_slice(&[0.0, 0.0]),
            &Vector::from_slice(&[1.0, 0.0]),
            &Vector::from_slice(&[0.0, 0.0]),
            &Vector::from_slice(&[2.0, 0.0]),
        )
        .unwrap();
        assert_eq!(init.gamma_bb, 0.5);
        assert_eq!(init.b, Matrix::scaled_identity(2, 0.4));
        assert!(init.warning.is_none());
    }

    #[test]
    fn bb_identity_hessian() {
        let xm = Vector::from_slice(&[1.0, -2.0, 0.5]);
        let x0 = Vector::from_slice(&[0.7, -1.0, 0.25]);
        let init = bb_init(&xm, &x0, &xm, &x0).unwrap();
        assert_eq!(init.gamma_bb, 1.0);
        assert_eq!(init.b, Matrix::scaled_identity(3, 0.8));
    }

    #[test]
    fn bb_negative_and_stationary() {
        let z = Vector::zeros(2);
        let init = bb_init(&z, &Vector::from_slice(&[1.0, 0.0]), &z, &Vector::from_slice(&[-2.0, 0.0])).unwrap();
        assert_eq!(init.gamma_bb, -0.5);
        assert_eq!(init.b, Matrix::scaled_identity(2, 0.4));
        assert!(init.warning.is_some());
        let g = Vector::from_slice(&[1.0, 1.0]);
        assert!(matches!(
            bb_init(&z, &g, &g, &g),
            Err(Error::StationaryStart(_))
        ));
    }

    #[test]
    fn identity_b_features() {
        let mut rng = Rng::new(0, "f");
        let (x, xp, g, gp) = (
            rng.normal_vector(4),
            rng.normal_vector(4),
            rng.normal_vector(4),
            rng.normal_vector(4),
        );
        let f = qn_features(
            &mut Eager,
            &Matrix::identity(4),
            &x.to_column(),
            &xp.to_column(),
            &g.to_column(),
            &gp.to_column(),
            1.0,
        );
        assert_eq!(f.input.column(0), g.sub(&gp));
        assert_eq!(f.input.column(1), x.sub(&xp));
        assert_eq!(f.input.column(2), g.scale(-1.0));
    }

    #[test]
    fn orthogonal_prediction_skips_update() {
        let b = Matrix::identity(2);
        let dg = Matrix::from_vec(2, 1, vec![1.0, 0.0]);
        let d = Matrix::from_vec(2, 1, vec![0.5, 0.5]);
        let y = Matrix::from_vec(2, 1, vec![0.0, 3.0]);
        let (bk, skipped) = qn_update(&mut Eager, &b, &dg, &d, &dg, &y, &UpdateGuards::default());
        assert!(skipped);
        assert_eq!(bk, b);
        let zero = Matrix::zeros(2, 1);
        let (_, skipped) = qn_update(&mut Eager, &b, &dg, &d, &dg, &zero, &UpdateGuards::default());
        assert!(skipped);
    }

    #[test]
    fn secant_equation_with_y_equal_d() {
        let mut rng = Rng::new(4, "secant");
        for _ in 0..20 {
            let g = rng.normal_matrix(5, 5);
            let b = g.matmul(&g.transpose()).add(&Matrix::identity(5));
            let dg = rng.normal_vector(5).to_column();
            let d = rng.normal_vector(5).to_column();
            let bdg = b.matmul(&dg);
            let (bk, skipped) = qn_update(&mut Eager, &b, &dg, &d, &bdg, &d, &UpdateGuards::default());
            assert!(!skipped);
            let res = bk.matmul(&dg).sub(&d);
            assert!(norm_of(&res) <= 1e-9 * norm_of(&d) * b.norm_inf().max(1.0));
            assert_eq!(bk.asymmetry(), 0.0);
        }
    }
}
