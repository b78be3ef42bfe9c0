//! Compares one and two receive antennas with a sweep over the antenna count.

use gfna::harness::{run_sweep, Algorithm, ExperimentConfig, SweepAxis};

fn main() -> gfna::Result<()> {
    let mut config = ExperimentConfig::default();
    config.data.samples = 20_000;
    config.train.epochs = 5;
    config.sweep.axis = SweepAxis::Antennas;
    config.sweep.values = vec![1.0, 2.0];
    config.sweep.snr_db = 15.0;
    config.sweep.trials = 1000;
    config.sweep.algorithms = vec![Algorithm::Daud, Algorithm::LsBomp];

    let out = std::env::temp_dir().join("gfna_multi_antenna");
    for row in run_sweep(&config, &out)? {
        println!("M={}  {:<8} P_succ {:.3} ± {:.3}", row.value, row.algorithm, row.p_succ, row.ci_half_width);
    }
    Ok(())
}
