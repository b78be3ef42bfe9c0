//! Active-user detection for grant-free NOMA uplinks.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! * [`signal_model`] synthesizes LDS codebooks, device geometry, Rayleigh
//!   channels and stacked received vectors `y = Φx + v`.
//! * [`cs_baselines`] recovers the active set with block OMP (LS or MMSE
//!   refit) and an exhaustive small-instance oracle.
//! * [`daud_net`] is the dense-residual feedforward detector: forward and
//!   backward passes, Adam training with rotating K-fold validation,
//!   ensembling and binary checkpoints.
//! * [`sparsity_est`] calibrates the ratio threshold and estimates the number
//!   of active devices from a bank of per-sparsity detectors.
//! * [`complexity`] holds the closed-form flop models.
//! * [`harness`] wires everything into training pipelines and Monte Carlo
//!   sweeps that write CSV.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod complexity;
pub mod cs_baselines;
pub mod daud_net;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod signal_model;
pub mod sparsity_est;

pub use error::{Error, Result};
