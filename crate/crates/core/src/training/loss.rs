//! The relative loss `ℓ_k = log(1 + (f(x_k) − f*)/(f(x̃_k) − f*))`, with
//! `x̃_k` the BFGS iterate, averaged over segment boundaries.

use crate::error::{Error, Result};
use crate::loa_bfgs::{bb_init, qn_features, qn_step, qn_update, UpdateGuards};
use crate::loa_model::{forward_with, ModelWeights};
use crate::numerics::{Eager, Matrix, NodeId, Tape, TensorOps};
use crate::problems::{Problem, QuadraticTerms};

/// One training problem with its reference gaps.
#[derive(Debug, Clone, Copy)]
pub struct BatchItem<'a> {
    pub problem: &'a Problem,
    pub reference: &'a [f64],
}

/// What an iteration carries to the next.
#[derive(Debug, Clone)]
pub struct Carried<T> {
    pub x: T,
    pub x_prev: T,
    pub g_prev: T,
    pub b: T,
}

impl<T: Clone> Carried<T> {
    fn detached<O: TensorOps<T = T>>(&self, ops: &mut O) -> Self {
        Self {
            x: ops.detach(&self.x),
            x_prev: ops.detach(&self.x_prev),
            g_prev: ops.detach(&self.g_prev),
            b: ops.detach(&self.b),
        }
    }


    fn on<O: TensorOps<T = T>>(ops: &mut O, c: &Carried<Matrix>) -> Self {
        Self {
            x: ops.constant(c.x.clone()),
            x_prev: ops.constant(c.x_prev.clone()),
            g_prev: ops.constant(c.g_prev.clone()),
            b: ops.constant(c.b.clone()),
        }
    }
}

/// Unrolling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unroll {
    pub k: usize,
    pub segment: usize,
    pub gamma: f64,
}

impl Unroll {
    fn check(&self, item: &BatchItem) -> Result<()> {
        super::reference::boundaries(self.k, self.segment)?;
        if item.reference.len() != self.k / self.segment {
            return Err(Error::Shape(format!(
                "problem '{}' has {} reference gaps, expected {}",
                item.problem.label,
                item.reference.len(),
                self.k / self.segment
            )));
        }
        if item.problem.f_star.is_none() {
            return Err(Error::InvalidParameter(format!("problem '{}' has no f*", item.problem.label)));
        }
        Ok(())
    }
}

fn terms_of<O: TensorOps>(ops: &mut O, p: &Problem) -> Result<QuadraticTerms<O::T>> {
    let q = p.objective.as_quadratic().ok_or_else(|| {
        Error::Capability(format!("unrolled loss needs a closed-form quadratic, '{}' is not one", p.label))
    })?;
    Ok(q.terms_on(ops))
}

/// State before the first iteration: the init pair and `B₋₁` from the
/// Barzilai–Borwein step.
pub fn initial_carried(p: &Problem) -> Result<Carried<Matrix>> {
    let g_prev = p.gradient(&p.x_prev);
    let g0 = p.gradient(&p.x0);
    let init = bb_init(&p.x_prev, &p.x0, &g_prev, &g0)?;
    Ok(Carried {
        x: p.x0.to_column(),
        x_prev: p.x_prev.to_column(),
        g_prev: g_prev.to_column(),
        b: init.b,
    })
}

fn check_finite(m: &Matrix, iteration: usize) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteLoss { iteration })
    }
}

/// Runs `steps` learned iterations from `c`; `k0` numbers the first one.
fn advance<O: TensorOps>(
    ops: &mut O,
    w: &[O::T],
    terms: &QuadraticTerms<O::T>,
    mut c: Carried<O::T>,
    k0: usize,
    steps: usize,
    gamma: f64,
) -> Result<Carried<O::T>> {
    let guards = UpdateGuards::default();
    for k in k0..k0 + steps {
        let g = terms.gradient(ops, &c.x);
        let feats = qn_features(ops, &c.b, &c.x, &c.x_prev, &g, &c.g_prev, gamma);
        let y = forward_with(ops, w, &feats.input);
        let (b, _) = qn_update(ops, &c.b, &feats.dg, &feats.d, &feats.bdg, &y, &guards);
        let x = qn_step(ops, &c.x, &b, &g, gamma);
        check_finite(ops.value(&x), k + 1)?;
        c = Carried {
            x_prev: c.x,
            g_prev: g,
            x,
            b,
        };
    }
    Ok(c)
}

/// `ℓ = log(1 + (f(x) − f*)/reference)`.
fn segment_term<O: TensorOps>(
    ops: &mut O,
    terms: &QuadraticTerms<O::T>,
    x: &O::T,
    f_star: f64,
    reference: f64,
    iteration: usize,
) -> Result<O::T> {
    let f = terms.value(ops, x);
    let fs = ops.constant(Matrix::scalar(f_star));
    let gap = ops.sub(&f, &fs);
    let ratio = ops.div_const(&gap, reference);
    let l = ops.log1p(&ratio);
    check_finite(ops.value(&l), iteration)?;
    Ok(l)
}

/// Mean of the segment losses over every batch member, recorded on `ops`.
/// All carried state is detached at the segment boundaries, so each term
/// differentiates only through its own segment.
pub fn unrolled_loss_with<O: TensorOps>(ops: &mut O, w: &[O::T], batch: &[BatchItem], u: Unroll) -> Result<O::T> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    let mut total: Option<O::T> = None;
    let mut count = 0usize;
    for item in batch {
        u.check(item)?;
        let terms = terms_of(ops, item.problem)?;
        let f_star = item.problem.f_star.unwrap_or_default();
        let mut c = Carried::on(ops, &initial_carried(item.problem)?);
        for (s, &reference) in item.reference.iter().enumerate() {
            let k0 = s * u.segment;
            c = advance(ops, w, &terms, c, k0, u.segment, u.gamma)?;
            let l = segment_term(ops, &terms, &c.x, f_star, reference, k0 + u.segment)?;
            total = Some(match total {
                None => l,
                Some(t) => ops.add(&t, &l),
            });
            count += 1;
            c = c.detached(ops);
        }
    }
    let total = total.expect("non-empty batch");
    Ok(ops.div_const(&total, count as f64))
}

/// Loss value without recording.
pub fn unrolled_loss(weights: &ModelWeights, batch: &[BatchItem], u: Unroll) -> Result<f64> {
    let l = unrolled_loss_with(&mut Eager, weights.layers(), batch, u)?;
    Ok(l.scalar_value())
}

fn weight_leaves(tape: &mut Tape, weights: &ModelWeights) -> Vec<NodeId> {
    weights.layers().iter().map(|m| tape.leaf(m.clone())).collect()
}

/// Loss and its gradient with respect to every layer.
pub fn loss_and_grad(weights: &ModelWeights, batch: &[BatchItem], u: Unroll) -> Result<(f64, Vec<Matrix>)> {
    let mut tape = Tape::new();
    let w = weight_leaves(&mut tape, weights);
    let l = unrolled_loss_with(&mut tape, &w, batch, u)?;
    let grads = tape.grad(l, &w)?;
    Ok((tape.scalar(&l), grads))
}

/// Carried state at every segment start along the unperturbed trajectory.
fn segment_starts(weights: &ModelWeights, item: &BatchItem, u: Unroll) -> Result<Vec<Carried<Matrix>>> {
    u.check(item)?;
    let terms = terms_of(&mut Eager, item.problem)?;
    let mut c = initial_carried(item.problem)?;
    let mut starts = Vec::new();
    for s in 0..item.reference.len() {
        starts.push(c.clone());
        c = advance(&mut Eager, weights.layers(), &terms, c, s * u.segment, u.segment, u.gamma)?;
    }
    Ok(starts)
}

/// Segment `s` loss term from a fixed start state, on any backend.
fn segment_loss<O: TensorOps>(
    ops: &mut O,
    w: &[O::T],
    item: &BatchItem,
    start: &Carried<Matrix>,
    s: usize,
    u: Unroll,
) -> Result<O::T> {
    let terms = terms_of(ops, item.problem)?;
    let c = Carried::on(ops, start);
    let c = advance(ops, w, &terms, c, s * u.segment, u.segment, u.gamma)?;
    let f_star = item.problem.f_star.unwrap_or_default();
    segment_term(ops, &terms, &c.x, f_star, item.reference[s], (s + 1) * u.segment)
}

fn batch_terms(batch: &[BatchItem], u: Unroll) -> usize {
    batch.len() * (u.k / u.segment)
}

/// Gradient of the truncated graph built independently: each segment is
/// recorded on its own tape from the constant start state of the
/// unperturbed run, and the per-segment gradients are averaged.
pub fn truncated_grad_oracle(weights: &ModelWeights, batch: &[BatchItem], u: Unroll) -> Result<Vec<Matrix>> {
    let mut acc: Vec<Matrix> = weights.layers().iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
    for item in batch {
        for (s, start) in segment_starts(weights, item, u)?.iter().enumerate() {
            let mut tape = Tape::new();
            let w = weight_leaves(&mut tape, weights);
            let l = segment_loss(&mut tape, &w, item, start, s, u)?;
            for (a, g) in acc.iter_mut().zip(tape.grad(l, &w)?) {
                *a = a.add(&g);
            }
        }
    }
    let n = batch_terms(batch, u) as f64;
    Ok(acc.into_iter().map(|a| a.map(|v| v / n)).collect())
}

/// Central differences of the truncated graph: each segment term is
/// perturbed in `θ` while its start state stays at the unperturbed value.
/// With a single segment this is the ordinary finite-difference gradient
/// of the loss. Flat parameter order.
pub fn truncated_fd_grad(weights: &ModelWeights, batch: &[BatchItem], u: Unroll, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step h = {h} must be positive")));
    }
    let base = weights.to_flat();
    let mut out = vec![0.0; base.len()];
    for item in batch {
        let starts = segment_starts(weights, item, u)?;
        for (s, start) in starts.iter().enumerate() {
            let eval = |flat: &[f64]| -> Result<f64> {
                let w = ModelWeights::from_flat(flat)?;
                Ok(segment_loss(&mut Eager, w.layers(), item, start, s, u)?.scalar_value())
            };
            let mut theta = base.clone();
            for i in 0..base.len() {
                theta[i] = base[i] + h;
                let fp = eval(&theta)?;
                theta[i] = base[i] - h;
                let fm = eval(&theta)?;
                theta[i] = base[i];
                out[i] += (fp - fm) / (2.0 * h);
            }
        }
    }
    let n = batch_terms(batch, u) as f64;
    Ok(out.into_iter().map(|v| v / n).collect())
}

/// Flattens per-layer gradients in storage order.
pub fn flatten(grads: &[Matrix]) -> Vec<f64> {
    grads.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
}
