//! Tensor operations shared by eager evaluation and the reverse-mode tape.
//!
//! Everything is a [`Matrix`]: vectors are `n × 1` columns and scalars are
//! `1 × 1`. Code written against [`TensorOps`] runs unchanged on [`Eager`]
//! (plain values) and on [`Tape`](super::Tape) (recorded for
//! differentiation), and both backends evaluate through the same kernels
//! below, so the two paths produce identical floating-point results.

use super::linalg::Matrix;

pub trait TensorOps {
    type T: Clone;

    fn constant(&mut self, value: Matrix) -> Self::T;
    fn value<'a>(&'a self, t: &'a Self::T) -> &'a Matrix;

    fn add(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn sub(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    /// `s · a` with `s` a `1 × 1` tensor.
    fn scale(&mut self, a: &Self::T, s: &Self::T) -> Self::T;
    fn scale_const(&mut self, a: &Self::T, c: f64) -> Self::T;
    fn div_const(&mut self, a: &Self::T, c: f64) -> Self::T;
    /// Product of two `1 × 1` tensors.
    fn mul(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn recip(&mut self, a: &Self::T) -> Self::T;
    fn log1p(&mut self, a: &Self::T) -> Self::T;
    fn relu(&mut self, a: &Self::T) -> Self::T;
    fn matmul(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    /// Inner product of two columns, as a `1 × 1` tensor.
    fn dot(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    /// `a bᵀ` for columns `a`, `b`.
    fn outer(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn transpose(&mut self, a: &Self::T) -> Self::T;
    /// Column means of an `n × c` tensor, as `1 × c`.
    fn mean_rows(&mut self, a: &Self::T) -> Self::T;
    /// Repeats a `1 × c` row `n` times.
    fn broadcast_rows(&mut self, a: &Self::T, n: usize) -> Self::T;
    fn concat_cols(&mut self, parts: &[Self::T]) -> Self::T;
    /// Same value, cut from the differentiation graph.
    fn detach(&mut self, a: &Self::T) -> Self::T;

    fn scalar(&self, t: &Self::T) -> f64 {
        self.value(t).scalar_value()
    }
}

pub(crate) mod kernels {
    use super::Matrix;

    pub fn dot(a: &Matrix, b: &Matrix) -> Matrix {
        assert_eq!(a.shape(), b.shape(), "dot shape mismatch");
        let mut acc = 0.0;
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            acc += x * y;
        }
        Matrix::scalar(acc)
    }

    pub fn outer(a: &Matrix, b: &Matrix) -> Matrix {
        let (n, m) = (a.as_slice().len(), b.as_slice().len());
        let mut data = Vec::with_capacity(n * m);
        for &x in a.as_slice() {
            for &y in b.as_slice() {
                data.push(x * y);
            }
        }
        Matrix::from_vec(n, m, data)
    }

    pub fn scale(a: &Matrix, s: f64) -> Matrix {
        a.map(|x| s * x)
    }

    pub fn relu(a: &Matrix) -> Matrix {
        a.map(|x| if x > 0.0 { x } else { 0.0 })
    }

    /// Column means with each column summed in sorted order, so the result
    /// does not depend on the row order of the input.
    pub fn mean_rows(a: &Matrix) -> Matrix {
        let (n, c) = a.shape();
        let mut out = Vec::with_capacity(c);
        let mut col = Vec::with_capacity(n);
        for j in 0..c {
            col.clear();
            col.extend((0..n).map(|i| a[(i, j)]));
            col.sort_by(f64::total_cmp);
            let mut acc = 0.0;
            for v in &col {
                acc += v;
            }
            out.push(acc / n as f64);
        }
        Matrix::from_vec(1, c, out)
    }

    pub fn broadcast_rows(a: &Matrix, n: usize) -> Matrix {
        assert_eq!(a.rows(), 1, "broadcast needs a single row");
        let mut data = Vec::with_capacity(n * a.cols());
        for _ in 0..n {
            data.extend_from_slice(a.as_slice());
        }
        Matrix::from_vec(n, a.cols(), data)
    }

    pub fn concat_cols(parts: &[&Matrix]) -> Matrix {
        Matrix::from_columns(parts).expect("concat row mismatch")
    }
}

/// Plain evaluation: tensors are owned matrices, nothing is recorded.
#[derive(Debug, Default, Clone, Copy)]
pub struct Eager;

impl TensorOps for Eager {
    type T = Matrix;

    fn constant(&mut self, value: Matrix) -> Matrix {
        value
    }

    fn value<'a>(&'a self, t: &'a Matrix) -> &'a Matrix {
        t
    }

    fn add(&mut self, a: &Matrix, b: &Matrix) -> Matrix {
        a.add(b)
    }

    fn sub(&mut self, a: &Matrix, b: &Matrix) -> Matrix {
        a.sub(b)
    }

    fn scale(&mut self, a: &Matrix, s: &Matrix) -> Matrix {
        kernels::scale(a, s.scalar_value())
    }

    fn scale_const(&mut self, a: &Matrix, c: f64) -> Matrix {
        kernels::scale(a, c)
    }

    fn div_const(&mut self, a: &Matrix, c: f64) -> Matrix {
        a.map(|x| x / c)
    }

    fn mul(&mut self, a: &Matrix, b: &Matrix) -> Matrix {
        Matrix::scalar(a.scalar_value() * b.scalar_value())
    }

    fn recip(&mut self, a: &Matrix) -> Matrix {
        a.map(|x| 1.0 / x)
    }

    fn log1p(&mut self, a: &Matrix) -> Matrix {
        a.map(f64::ln_1p)
    }

    fn relu(&mut self, a: &Matrix) -> Matrix {
        kernels::relu(a)
    }

    fn matmul(&mut self, a: &Matrix, b: &Matrix) -> Matrix {
        a.matmul(b)
    }

    fn dot(&mut self, a: &Matrix, b: &Matrix) -> Matrix {
        kernels::dot(a, b)
    }

    fn outer(&mut self, a: &Matrix, b: &Matrix) -> Matrix {
        kernels::outer(a, b)
    }

    fn transpose(&mut self, a: &Matrix) -> Matrix {
        a.transpose()
    }

    fn mean_rows(&mut self, a: &Matrix) -> Matrix {
        kernels::mean_rows(a)
    }

    fn broadcast_rows(&mut self, a: &Matrix, n: usize) -> Matrix {
        kernels::broadcast_rows(a, n)
    }

    fn concat_cols(&mut self, parts: &[Matrix]) -> Matrix {
        let refs: Vec<&Matrix> = parts.iter().collect();
        kernels::concat_cols(&refs)
    }

    fn detach(&mut self, a: &Matrix) -> Matrix {
        a.clone()
    }
}
