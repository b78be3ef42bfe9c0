//! Experiment orchestration: configuration, training pipelines, Monte Carlo
//! sweeps and blind-sparsity evaluation, all writing plain CSV.

mod config;
mod estimate;
mod pipeline;
mod plot;
mod sweep;

pub use config::{
    Algorithm, BankSettings, DataSettings, EstimateSettings, ExperimentConfig, NetworkSettings, SweepAxis,
    SweepSettings,
};
pub use estimate::{estimate_stream, evaluate_bank, run_estimate, EstimateRow};
pub use pipeline::{
    bank_pipeline, calibration_stream, gen_data, member_seed, parameter_hash, train_ensemble, train_member,
    train_pipeline, training_data, training_stream, MemberRecord, TrainManifest, TrainedMember,
};
pub use plot::{line_chart_svg, Series};
pub use sweep::{
    evaluate_algorithms, mean_and_half_width, point_scenario, run_sweep, success_probability, test_instances,
    AlgorithmScore, ResultRow, SweepPaths, TimingRow,
};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GFNA_THREADS";

/// Sizes the global worker pool from `GFNA_THREADS` when it is set. Safe to
/// call more than once; only the first call has an effect.
pub fn init_thread_pool() -> crate::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| crate::Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    // An already-built pool is fine: the first caller wins.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
