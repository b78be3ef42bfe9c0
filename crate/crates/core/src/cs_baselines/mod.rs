//! Greedy block-sparse recovery: block OMP with least-squares or MMSE refit,
//! and an exhaustive search oracle for small instances.

mod bomp;
mod oracle;
mod refit;

pub use bomp::{bomp, BompConfig, Estimator, RecoveryResult, Stopping};
pub use oracle::{binomial, oracle_exhaustive, support_objective, OracleResult, ORACLE_LIMIT};
pub use refit::{ls_refit, mmse_refit, Refit};
