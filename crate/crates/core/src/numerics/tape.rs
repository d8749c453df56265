//! Reverse-mode automatic differentiation over matrix-valued nodes.
//!
//! Nodes are appended in evaluation order and the backward pass walks them in
//! strict reverse order. Constants (including detached copies) carry no
//! adjoint; only leaves created with [`Tape::leaf`] are differentiable inputs.

use super::linalg::Matrix;
use super::ops::{kernels, TensorOps};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Scale(NodeId, NodeId),
    ScaleConst(NodeId, f64),
    DivConst(NodeId, f64),
    Mul(NodeId, NodeId),
    Recip(NodeId),
    Log1p(NodeId),
    Relu(NodeId),
    MatMul(NodeId, NodeId),
    Dot(NodeId, NodeId),
    Outer(NodeId, NodeId),
    Transpose(NodeId),
    MeanRows(NodeId),
    BroadcastRows(NodeId),
    ConcatCols(Vec<NodeId>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
    tracked: bool,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Differentiable input.
    pub fn leaf(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf, true)
    }

    pub fn node_value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    fn tracked(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].tracked)
    }

    fn push(&mut self, value: Matrix, op: Op, tracked: bool) -> NodeId {
        self.nodes.push(Node { value, op, tracked });
        NodeId(self.nodes.len() - 1)
    }

    fn record(&mut self, value: Matrix, op: Op, inputs: &[NodeId]) -> NodeId {
        let tracked = self.tracked(inputs);
        self.push(value, op, tracked)
    }

    /// Adjoints of the `1 × 1` node `output` with respect to `params`.
    /// Parameters the output does not depend on get zero adjoints.
    pub fn grad(&self, output: NodeId, params: &[NodeId]) -> Result<Vec<Matrix>> {
        let out = &self.nodes[output.0];
        if out.value.shape() != (1, 1) {
            return Err(Error::Shape(format!(
                "gradient needs a scalar output, got {:?}",
                out.value.shape()
            )));
        }
        let mut adj: Vec<Option<Matrix>> = vec![None; output.0 + 1];
        adj[output.0] = Some(Matrix::scalar(1.0));

        for i in (0..=output.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.tracked {
                continue;
            }
            let v = &node.value;
            let acc = |id: NodeId, contrib: Matrix, adj: &mut Vec<Option<Matrix>>| {
                if !self.nodes[id.0].tracked {
                    return;
                }
                match &mut adj[id.0] {
                    Some(existing) => *existing = existing.add(&contrib),
                    slot @ None => *slot = Some(contrib),
                }
            };
            match &node.op {
                Op::Leaf => {
                    adj[i] = Some(g);
                }
                Op::Constant => {}
                Op::Add(a, b) => {
                    acc(*a, g.clone(), &mut adj);
                    acc(*b, g, &mut adj);
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone(), &mut adj);
                    acc(*b, g.scale(-1.0), &mut adj);
                }
                Op::Scale(a, s) => {
                    let av = self.node_value(*a);
                    let sv = self.node_value(*s).scalar_value();
                    let ds = kernels::dot(&g, av);
                    acc(*a, g.scale(sv), &mut adj);
                    acc(*s, ds, &mut adj);
                }
                Op::ScaleConst(a, c) => acc(*a, g.scale(*c), &mut adj),
                Op::DivConst(a, c) => acc(*a, g.map(|x| x / c), &mut adj),
                Op::Mul(a, b) => {
                    let gv = g.scalar_value();
                    let av = self.node_value(*a).scalar_value();
                    let bv = self.node_value(*b).scalar_value();
                    acc(*a, Matrix::scalar(gv * bv), &mut adj);
                    acc(*b, Matrix::scalar(gv * av), &mut adj);
                }
                Op::Recip(a) => {
                    acc(*a, g.zip_map(v, |gi, yi| -gi * yi * yi), &mut adj);
                }
                Op::Log1p(a) => {
                    let av = self.node_value(*a);
                    acc(*a, g.zip_map(av, |gi, xi| gi / (1.0 + xi)), &mut adj);
                }
                Op::Relu(a) => {
                    let av = self.node_value(*a);
                    acc(
                        *a,
                        g.zip_map(av, |gi, xi| if xi > 0.0 { gi } else { 0.0 }),
                        &mut adj,
                    );
                }
                Op::MatMul(a, b) => {
                    let av = self.node_value(*a);
                    let bv = self.node_value(*b);
                    if self.nodes[a.0].tracked {
                        acc(*a, g.matmul(&bv.transpose()), &mut adj);
                    }
                    if self.nodes[b.0].tracked {
                        acc(*b, av.transpose().matmul(&g), &mut adj);
                    }
                }
                Op::Dot(a, b) => {
                    let gv = g.scalar_value();
                    let av = self.node_value(*a);
                    let bv = self.node_value(*b);
                    acc(*a, bv.scale(gv), &mut adj);
                    acc(*b, av.scale(gv), &mut adj);
                }
                Op::Outer(a, b) => {
                    let av = self.node_value(*a);
                    let bv = self.node_value(*b);
                    if self.nodes[a.0].tracked {
                        let col = Matrix::from_vec(bv.as_slice().len(), 1, bv.as_slice().to_vec());
                        acc(*a, reshape_like(g.matmul(&col), av), &mut adj);
                    }
                    if self.nodes[b.0].tracked {
                        let col = Matrix::from_vec(av.as_slice().len(), 1, av.as_slice().to_vec());
                        acc(*b, reshape_like(g.transpose().matmul(&col), bv), &mut adj);
                    }
                }
                Op::Transpose(a) => acc(*a, g.transpose(), &mut adj),
                Op::MeanRows(a) => {
                    let n = self.node_value(*a).rows();
                    let row = g.map(|x| x / n as f64);
                    acc(*a, kernels::broadcast_rows(&row, n), &mut adj);
                }
                Op::BroadcastRows(a) => {
                    let (n, c) = g.shape();
                    let mut sums = vec![0.0; c];
                    for r in 0..n {
                        for (j, s) in sums.iter_mut().enumerate() {
                            *s += g[(r, j)];
                        }
                    }
                    acc(*a, Matrix::from_vec(1, c, sums), &mut adj);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let (rows, cols) = self.node_value(*p).shape();
                        let mut block = Matrix::zeros(rows, cols);
                        for r in 0..rows {
                            for c in 0..cols {
                                block[(r, c)] = g[(r, offset + c)];
                            }
                        }
                        offset += cols;
                        acc(*p, block, &mut adj);
                    }
                }
            }
        }

        Ok(params
            .iter()
            .map(|p| {
                let node = &self.nodes[p.0];
                match (&node.op, adj.get(p.0).cloned().flatten()) {
                    (Op::Leaf, Some(a)) => a,
                    _ => Matrix::zeros(node.value.rows(), node.value.cols()),
                }
            })
            .collect())
    }
}

fn reshape_like(m: Matrix, like: &Matrix) -> Matrix {
    Matrix::from_vec(like.rows(), like.cols(), m.into_vec())
}

impl TensorOps for Tape {
    type T = NodeId;

    fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Constant, false)
    }

    fn value<'a>(&'a self, t: &'a NodeId) -> &'a Matrix {
        &self.nodes[t.0].value
    }

    fn add(&mut self, a: &NodeId, b: &NodeId) -> NodeId {
        let v = self.node_value(*a).add(self.node_value(*b));
        self.record(v, Op::Add(*a, *b), &[*a, *b])
    }

    fn sub(&mut self, a: &NodeId, b: &NodeId) -> NodeId {
        let v = self.node_value(*a).sub(self.node_value(*b));
        self.record(v, Op::Sub(*a, *b), &[*a, *b])
    }

    fn scale(&mut self, a: &NodeId, s: &NodeId) -> NodeId {
        let v = kernels::scale(self.node_value(*a), self.node_value(*s).scalar_value());
        self.record(v, Op::Scale(*a, *s), &[*a, *s])
    }

    fn scale_const(&mut self, a: &NodeId, c: f64) -> NodeId {
        let v = kernels::scale(self.node_value(*a), c);
        self.record(v, Op::ScaleConst(*a, c), &[*a])
    }

    fn div_const(&mut self, a: &NodeId, c: f64) -> NodeId {
        let v = self.node_value(*a).map(|x| x / c);
        self.record(v, Op::DivConst(*a, c), &[*a])
    }

    fn mul(&mut self, a: &NodeId, b: &NodeId) -> NodeId {
        let v = Matrix::scalar(
            self.node_value(*a).scalar_value() * self.node_value(*b).scalar_value(),
        );
        self.record(v, Op::Mul(*a, *b), &[*a, *b])
    }

    fn recip(&mut self, a: &NodeId) -> NodeId {
        let v = self.node_value(*a).map(|x| 1.0 / x);
        self.record(v, Op::Recip(*a), &[*a])
    }

    fn log1p(&mut self, a: &NodeId) -> NodeId {
        let v = self.node_value(*a).map(f64::ln_1p);
        self.record(v, Op::Log1p(*a), &[*a])
    }

    fn relu(&mut self, a: &NodeId) -> NodeId {
        let v = kernels::relu(self.node_value(*a));
        self.record(v, Op::Relu(*a), &[*a])
    }

    fn matmul(&mut self, a: &NodeId, b: &NodeId) -> NodeId {
        let v = self.node_value(*a).matmul(self.node_value(*b));
        self.record(v, Op::MatMul(*a, *b), &[*a, *b])
    }

    fn dot(&mut self, a: &NodeId, b: &NodeId) -> NodeId {
        let v = kernels::dot(self.node_value(*a), self.node_value(*b));
        self.record(v, Op::Dot(*a, *b), &[*a, *b])
    }

    fn outer(&mut self, a: &NodeId, b: &NodeId) -> NodeId {
        let v = kernels::outer(self.node_value(*a), self.node_value(*b));
        self.record(v, Op::Outer(*a, *b), &[*a, *b])
    }

    fn transpose(&mut self, a: &NodeId) -> NodeId {
        let v = self.node_value(*a).transpose();
        self.record(v, Op::Transpose(*a), &[*a])
    }

    fn mean_rows(&mut self, a: &NodeId) -> NodeId {
        let v = kernels::mean_rows(self.node_value(*a));
        self.record(v, Op::MeanRows(*a), &[*a])
    }

    fn broadcast_rows(&mut self, a: &NodeId, n: usize) -> NodeId {
        let v = kernels::broadcast_rows(self.node_value(*a), n);
        self.record(v, Op::BroadcastRows(*a), &[*a])
    }

    fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let refs: Vec<&Matrix> = parts.iter().map(|p| self.node_value(*p)).collect();
        let v = kernels::concat_cols(&refs);
        self.record(v, Op::ConcatCols(parts.to_vec()), parts)
    }

    fn detach(&mut self, a: &NodeId) -> NodeId {
        let v = self.node_value(*a).clone();
        self.push(v, Op::Constant, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, Rng, Vector};

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec())
    }

    #[test]
    fn square_at_three() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::scalar(3.0));
        let y = t.mul(&x, &x);
        let g = t.grad(y, &[x]).unwrap();
        assert_eq!(g[0].scalar_value(), 6.0);
    }

    #[test]
    fn linear_form_adjoint_is_coefficients() {
        let a = [1.5, -2.0, 0.25];
        let mut t = Tape::new();
        let x = t.leaf(col(&[0.3, 0.1, -4.0]));
        let ac = t.constant(col(&a));
        let y = t.dot(&ac, &x);
        let g = t.grad(y, &[x]).unwrap();
        assert_eq!(g[0].as_slice(), &a);
    }

    #[test]
    fn non_scalar_output_rejected() {
        let mut t = Tape::new();
        let x = t.leaf(col(&[1.0, 2.0]));
        assert!(matches!(t.grad(x, &[x]), Err(Error::Shape(_))));
    }

    #[test]
    fn unreachable_and_detached_leaves_get_zero() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::scalar(2.0));
        let z = t.leaf(Matrix::scalar(5.0));
        let xd = t.detach(&x);
        let y = t.mul(&xd, &x);
        let g = t.grad(y, &[x, z]).unwrap();
        assert_eq!(g[0].scalar_value(), 2.0);
        assert_eq!(g[1].scalar_value(), 0.0);
    }

    // Every primitive composed once; checked against central differences.
    fn composite(t: &mut Tape, x: NodeId) -> NodeId {
        let n = t.node_value(x).rows();
        let w = t.constant(Matrix::from_vec(
            n,
            2,
            (0..2 * n).map(|i| ((i as f64) * 0.37).sin()).collect(),
        ));
        let xt = t.transpose(&x);
        let row = t.matmul(&xt, &w);
        let b = t.broadcast_rows(&row, n);
        let c = t.concat_cols(&[b, x]);
        let r = t.relu(&c);
        let m = t.mean_rows(&r);
        let mt = t.transpose(&m);
        let o = t.outer(&x, &mt);
        let ot = t.transpose(&o);
        let ox = t.matmul(&ot, &x);
        let d = t.dot(&ox, &mt);
        let s = t.dot(&x, &x);
        let one = t.constant(Matrix::scalar(1.0));
        let s1 = t.add(&s, &one);
        let inv = t.recip(&s1);
        let sc = t.scale(&x, &inv);
        let sc2 = t.scale_const(&sc, 0.7);
        let diff = t.sub(&sc2, &x);
        let q = t.dot(&diff, &diff);
        let q2 = t.div_const(&q, 3.0);
        let prod = t.mul(&q2, &d);
        let sq = t.mul(&prod, &prod);
        t.log1p(&sq)
    }

    #[test]
    fn primitives_match_finite_differences() {
        let mut rng = Rng::new(0, "tape-fd");
        for _ in 0..5 {
            let x0 = rng.normal_vector(4);
            let mut t = Tape::new();
            let x = t.leaf(x0.to_column());
            let y = composite(&mut t, x);
            let g = t.grad(y, &[x]).unwrap()[0].to_vector();
            let fd = finite_diff_grad(
                |v: &Vector| {
                    let mut t = Tape::new();
                    let x = t.constant(v.to_column());
                    let y = composite(&mut t, x);
                    t.node_value(y).scalar_value()
                },
                &x0,
                1e-6,
            )
            .unwrap();
            for i in 0..4 {
                let err = (g[i] - fd[i]).abs() / fd[i].abs().max(1e-6);
                assert!(err < 1e-5, "coord {i}: ad {} fd {}", g[i], fd[i]);
            }
        }
    }
}
