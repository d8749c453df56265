use serde::{Deserialize, Serialize};

use crate::baselines::{classical_bfgs_spec, LineSearchConfig};
use crate::error::{Error, Result};
use crate::framework::{run, AlgorithmSpec};
use crate::problems::Problem;

/// A reference gap at or below this means BFGS already solved the problem
/// to machine precision.
pub const SOLVED_GAP: f64 = 1e-20;

/// BFGS sub-optimality `f(x̃_k) − f*` at every segment boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    /// Position of the problem in the list the table was built from.
    pub index: usize,
    pub label: String,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub index: usize,
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    /// Iteration counts `segment, 2·segment, …, K`.
    pub boundaries: Vec<usize>,
    pub rows: Vec<ReferenceRow>,
    pub excluded: Vec<Excluded>,
}

impl ReferenceTable {
    pub fn row(&self, index: usize) -> Option<&ReferenceRow> {
        self.rows.iter().find(|r| r.index == index)
    }

    pub fn usable(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.index).collect()
    }
}

/// Boundaries `segment, 2·segment, …, k`.
pub fn boundaries(k: usize, segment: usize) -> Result<Vec<usize>> {
    if segment == 0 || k == 0 || k % segment != 0 {
        return Err(Error::InvalidParameter(format!(
            "segment {segment} must divide K = {k}"
        )));
    }
    Ok((1..=k / segment).map(|i| i * segment).collect())
}

/// Runs plain BFGS (`γ = 1` unless given, no line search) on every problem
/// and records the gaps at the segment boundaries. Problems on which BFGS
/// diverges or reaches the minimum to machine precision are excluded.
pub fn precompute_reference(problems: &[Problem], k: usize, segment: usize, gamma: f64) -> Result<ReferenceTable> {
    let bounds = boundaries(k, segment)?;
    let spec = classical_bfgs_spec(gamma, LineSearchConfig::default());
    let hyper = spec.default_hyper();
    let mut table = ReferenceTable {
        boundaries: bounds.clone(),
        ..Default::default()
    };
    for (index, p) in problems.iter().enumerate() {
        let exclude = |reason: String| Excluded {
            index,
            label: p.label.clone(),
            reason,
        };
        let f_star = p
            .f_star
            .ok_or_else(|| Error::InvalidParameter(format!("problem '{}' has no f*", p.label)))?;
        let traj = match spec.initial_state(p, &hyper).and_then(|s0| run(&spec, p, s0, k, &hyper)) {
            Ok(t) => t,
            Err(e @ (Error::Divergence { .. } | Error::StationaryStart(_))) => {
                table.excluded.push(exclude(format!("BFGS reference failed: {e}")));
                continue;
            }
            Err(e) => return Err(e),
        };
        let gaps: Vec<f64> = bounds.iter().map(|&b| traj.f_values[b] - f_star).collect();
        match gaps
            .iter()
            .zip(&bounds)
            .find(|(g, _)| !(g.is_finite() && **g > SOLVED_GAP))
        {
            Some((g, b)) => table.excluded.push(exclude(format!(
                "BFGS gap {g:e} at k = {b} is not usable as a reference"
            ))),
            None => table.rows.push(ReferenceRow {
                index,
                label: p.label.clone(),
                gaps,
            }),
        }
    }
    Ok(table)
}
