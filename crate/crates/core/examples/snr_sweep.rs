//! Runs an SNR sweep through the harness with inline training, writing CSV
//! and an SVG chart. Pass `normalized` to place every device at the same
//! distance instead of redrawing distances per instance.

use gfna::harness::{run_sweep, Algorithm, ExperimentConfig};
use gfna::signal_model::GeometryPolicy;

fn main() -> gfna::Result<()> {
    let mut config = ExperimentConfig::default();
    if std::env::args().nth(1).as_deref() == Some("normalized") {
        config.scenario.geometry = GeometryPolicy::Normalized { distance_km: 0.5 };
    }
    config.data.samples = 20_000;
    config.train.epochs = 5;
    config.sweep.values = vec![0.0, 10.0, 20.0, 30.0];
    config.sweep.trials = 500;
    config.sweep.algorithms = vec![Algorithm::DaudEnsemble, Algorithm::LsBomp, Algorithm::MmseBomp, Algorithm::Oracle];

    let out = std::env::temp_dir().join("gfna_snr_sweep");
    let rows = run_sweep(&config, &out)?;
    for row in rows {
        println!(
            "{:>5} dB  {:<14} {:.3} ± {:.3}",
            row.value, row.algorithm, row.p_succ, row.ci_half_width
        );
    }
    println!("CSV and chart in {}", out.display());
    Ok(())
}
