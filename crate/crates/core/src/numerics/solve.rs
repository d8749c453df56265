use super::linalg::{Matrix, Vector};
use crate::error::{Error, Result};

/// Solves `A x = b` by LU factorization with partial pivoting.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    if !a.is_square() || a.rows() != b.len() {
        return Err(Error::Shape(format!(
            "cannot solve {:?} system with rhs of length {}",
            a.shape(),
            b.len()
        )));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    if scale == 0.0 {
        return Err(Error::Singular("zero matrix".into()));
    }
    for k in 0..n {
        let (piv, pval) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if pval <= 1e-14 * scale {
            return Err(Error::Singular(format!("pivot {pval:e} at column {k}")));
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            x.as_mut_slice().swap(k, piv);
        }
        let d = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / d;
            if f == 0.0 {
                continue;
            }
            lu[(i, k)] = f;
            for j in (k + 1)..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= lu[(k, j)] * x[j];
        }
        x[k] = s / lu[(k, k)];
    }
    if !x.is_finite() {
        return Err(Error::Singular("non-finite solution".into()));
    }
    Ok(x)
}
