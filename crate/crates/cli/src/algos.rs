//! Algorithm registry for the benchmark commands.

use loa::baselines::{adam_spec, classical_bfgs_spec, gd_spec, heavy_ball_spec, newton_spec, LineSearchConfig};
use loa::framework::AlgorithmSpec;
use loa::loa_bfgs::QuasiNewtonSpec;
use loa::loa_model::ModelWeights;
use loa::problems::Problem;

use crate::out::{CliError, CliResult};

pub const KNOWN: [&str; 6] = ["gd", "hb", "newton", "bfgs", "adam", "loa-bfgs"];
pub const HB_MOMENTUM: f64 = 0.5;
pub const ADAM_STEP: f64 = 0.01;

pub fn parse_list(list: &str) -> CliResult<Vec<String>> {
    let names: Vec<String> = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(CliError::usage("empty algorithm list"));
    }
    for n in &names {
        if !KNOWN.contains(&n.as_str()) {
            return Err(CliError::usage(format!(
                "unknown algorithm '{n}' (known: {})",
                KNOWN.join(", ")
            )));
        }
    }
    Ok(names)
}

#[derive(Debug, Clone, Default)]
pub struct AlgoOptions {
    pub gamma: Option<f64>,
    pub line_search: bool,
    pub weights: Option<ModelWeights>,
}

impl AlgoOptions {
    fn ls(&self) -> LineSearchConfig {
        if self.line_search {
            LineSearchConfig::armijo()
        } else {
            LineSearchConfig::default()
        }
    }
}

fn inverse_lipschitz(problem: &Problem) -> CliResult<f64> {
    problem
        .lipschitz()
        .filter(|l| *l > 0.0)
        .map(|l| 1.0 / l)
        .ok_or_else(|| CliError::usage(format!("'{}' has no Hessian; pass --gamma", problem.label)))
}

/// `name` configured for `problem`. Gradient descent and heavy ball default
/// to `γ = 1/L`, the quasi-Newton methods to `γ = 1`.
pub fn build(name: &str, problem: &Problem, opts: &AlgoOptions) -> CliResult<Box<dyn AlgorithmSpec>> {
    Ok(match name {
        "gd" => {
            let mut g = gd_spec(opts.gamma.map_or_else(|| inverse_lipschitz(problem), Ok)?);
            g.ls = opts.ls();
            Box::new(g)
        }
        "hb" => Box::new(heavy_ball_spec(
            HB_MOMENTUM,
            opts.gamma.map_or_else(|| inverse_lipschitz(problem), Ok)?,
        )?),
        "newton" => Box::new(newton_spec(opts.ls())),
        "bfgs" => Box::new(classical_bfgs_spec(opts.gamma.unwrap_or(1.0), opts.ls())),
        "adam" => Box::new(adam_spec(0.9, 0.999, opts.gamma.unwrap_or(ADAM_STEP), 1e-8)?),
        "loa-bfgs" => {
            let w = opts
                .weights
                .clone()
                .ok_or_else(|| CliError::usage("loa-bfgs needs --weights"))?;
            Box::new(QuasiNewtonSpec::learned(w, opts.gamma.unwrap_or(1.0), opts.ls()))
        }
        other => return Err(CliError::usage(format!("unknown algorithm '{other}'"))),
    })
}
