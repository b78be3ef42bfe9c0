//! Sweeps the device count at fixed subcarriers to show how the greedy
//! baselines degrade as the system becomes more overloaded. Each point gets
//! its own codebook.

use gfna::harness::{run_sweep, Algorithm, ExperimentConfig, SweepAxis};

fn main() -> gfna::Result<()> {
    let mut config = ExperimentConfig::default();
    config.sweep.axis = SweepAxis::Devices;
    config.sweep.values = vec![12.0, 16.0, 20.0, 24.0, 30.0];
    config.sweep.snr_db = 20.0;
    config.sweep.trials = 500;
    config.sweep.algorithms = vec![Algorithm::LsBomp, Algorithm::MmseBomp];

    let out = std::env::temp_dir().join("gfna_overloading");
    for row in run_sweep(&config, &out)? {
        println!("N={:>3}  {:<10} {:.3}", row.value, row.algorithm, row.p_succ);
    }
    Ok(())
}
