//! Side-by-side runs on transformed problems, the invariance table and the
//! descent monitor.

mod check;
mod table1;
mod theorem2;

pub use check::{check_equivariance, deviations, verdict_for, EquivarianceReport, Verdict, FAIL_THRESHOLD};
pub use table1::{
    algorithm_for, build_table1, expected_table1, Cell, Mismatch, Table1Config, Table1Matrix, Table1Row, ALGORITHMS,
    SCALES, TRANSFORMS,
};
pub use theorem2::{check_theorem2, violates_monotonicity, Theorem2Verdict, MONOTONE_SLACK};
