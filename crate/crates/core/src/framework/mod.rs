//! The generic iterative method: an oracle builds a fixed-width input from
//! the problem and the carried state, a model maps it to a prediction, an
//! update moves the iterate and a storage step refreshes the state.

mod runner;
mod spec;
mod state;
mod trajectory;
mod transform;

pub use runner::{run, run_with, RunOptions, EIGEN_FULL_RECORD_MAX_DIM};
pub use spec::{AlgorithmSpec, Curvature, Hyper, OracleOutput, UpdateOutput};
pub use state::{Role, State};
pub use trajectory::{EigenBound, Trajectory};
pub use transform::{transform_problem, ProblemTransform, TransformedObjective};
