use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::numerics::Vector;

/// Extreme eigenvalues of the preconditioner used at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenBound {
    pub k: usize,
    pub min: f64,
    pub max: f64,
}

/// Per-iteration record of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub algorithm: String,
    pub problem: String,
    /// `x₀, …, x_K`.
    pub iterates: Vec<Vector>,
    /// `f(x_k)` for every iterate.
    pub f_values: Vec<f64>,
    /// `‖∇f(x_k)‖` for every iterate.
    pub grad_norms: Vec<f64>,
    pub b_eigen_bounds: Vec<EigenBound>,
    /// Step length actually taken at each iteration (line search included).
    pub step_sizes_used: Vec<f64>,
    pub skipped_updates: usize,
    pub wall_time: f64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.step_sizes_used.len()
    }

    pub fn last_iterate(&self) -> &Vector {
        self.iterates.last().expect("trajectory has x₀")
    }

    pub fn final_value(&self) -> f64 {
        *self.f_values.last().expect("trajectory has f(x₀)")
    }

    /// `(f(x_K) − f*) / (f(x₀) − f*)`.
    pub fn relative_suboptimality(&self, f_star: f64) -> f64 {
        (self.final_value() - f_star) / (self.f_values[0] - f_star)
    }

    pub fn min_grad_norm(&self) -> f64 {
        self.grad_norms.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV with columns `k,f,f_minus_fstar,grad_norm,bmin,bmax`, preceded by
    /// a `# {json}` metadata line.
    pub fn to_csv(&self, f_star: Option<f64>, metadata: &serde_json::Value) -> String {
        let mut out = String::new();
        writeln!(out, "# {metadata}").unwrap();
        out.push_str("k,f,f_minus_fstar,grad_norm,bmin,bmax\n");
        for k in 0..self.f_values.len() {
            let f = self.f_values[k];
            let gap = f_star.map(|s| (f - s).to_string()).unwrap_or_default();
            let gn = self.grad_norms.get(k).map(|g| g.to_string()).unwrap_or_default();
            let (bmin, bmax) = self
                .b_eigen_bounds
                .iter()
                .find(|b| b.k == k)
                .map(|b| (b.min.to_string(), b.max.to_string()))
                .unwrap_or_default();
            writeln!(out, "{k},{f},{gap},{gn},{bmin},{bmax}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = Trajectory {
            f_values: vec![2.0, 1.0],
            grad_norms: vec![3.0, 0.5],
            b_eigen_bounds: vec![EigenBound { k: 0, min: 1.0, max: 1.0 }],
            iterates: vec![Vector::zeros(1), Vector::zeros(1)],
            step_sizes_used: vec![1.0],
            ..Default::default()
        };
        let csv = t.to_csv(Some(0.5), &serde_json::json!({"algorithm": "gd"}));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], r#"# {"algorithm":"gd"}"#);
        assert_eq!(lines[1], "k,f,f_minus_fstar,grad_norm,bmin,bmax");
        assert_eq!(lines[2], "0,2,1.5,3,1,1");
        assert_eq!(lines[3], "1,1,0.5,0.5,,");
        assert_eq!(t.relative_suboptimality(0.5), 1.0 / 3.0);
    }
}
