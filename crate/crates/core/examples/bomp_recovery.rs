//! Recovers the active set of desk-scale instances with LS-BOMP, MMSE-BOMP and
//! the exhaustive search, and prints per-SNR success rates.

use gfna::cs_baselines::{bomp, oracle_exhaustive, BompConfig};
use gfna::harness::success_probability;
use gfna::rng::{record_stream, streams};
use gfna::signal_model::{AudScenario, Environment};

fn main() -> gfna::Result<()> {
    let trials = 300;
    let base = AudScenario::desk();
    let k = base.active;
    println!("{:>6} {:>8} {:>10} {:>8}", "SNR", "LS-BOMP", "MMSE-BOMP", "oracle");
    for snr in [0.0, 10.0, 20.0, 30.0] {
        let env = Environment::new(base.with_snr_db(snr))?;
        let (mut ls, mut mmse, mut oracle) = (0.0, 0.0, 0.0);
        for i in 0..trials {
            let inst = env.synthesize(&mut record_stream(1, streams::TEST_BASE, i))?;
            let phi = env.sensing();
            ls += success_probability(&bomp(&inst.y, phi, &BompConfig::ls(k))?.support, &inst.support)?;
            let cfg = BompConfig::mmse(k, env.mmse_ratio(&inst));
            mmse += success_probability(&bomp(&inst.y, phi, &cfg)?.support, &inst.support)?;
            oracle += success_probability(&oracle_exhaustive(&inst.y, phi, k)?.support, &inst.support)?;
        }
        let t = trials as f64;
        println!("{snr:>6} {:>8.3} {:>10.3} {:>8.3}", ls / t, mmse / t, oracle / t);
    }

    let env = Environment::new(base.with_snr_db(20.0))?;
    let inst = env.synthesize(&mut record_stream(1, streams::TEST_BASE, 0))?;
    let result = bomp(&inst.y, env.sensing(), &BompConfig::ls(k))?;
    println!(
        "one trial: truth {:?}, selected {:?}, residual norms {:?}",
        inst.support,
        result.sorted_support(),
        result.residual_norms
    );
    Ok(())
}
