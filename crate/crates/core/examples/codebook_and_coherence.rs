//! Draws an LDS codebook, builds the stacked sensing matrix and reports the
//! codebook's mutual coherence as the overloading factor N/m grows.
//!
//! The stacked `Φ` itself always has coherence 1 once two devices share a
//! subcarrier: each of its columns carries a single codeword entry, because
//! every subcarrier sees its own channel coefficient.

use gfna::rng::{stream, streams};
use gfna::signal_model::{build_sensing_matrix, generate_codebook, mutual_coherence};

fn main() -> gfna::Result<()> {
    let m = 12;
    let s = 4;
    println!("{:>4} {:>6} {:>10} {:>10}", "N", "N/m", "codebook", "stacked");
    for n in [12, 16, 20, 24, 32] {
        let codebook = generate_codebook(m, n, s, &mut stream(0, streams::CODEBOOK))?;
        let phi = build_sensing_matrix(&codebook, 1, 1);
        let mu_codebook = mutual_coherence(&codebook.matrix(0))?;
        let mu_stacked = mutual_coherence(phi.matrix())?;
        println!("{n:>4} {:>6.2} {mu_codebook:>10.4} {mu_stacked:>10.4}", n as f64 / m as f64);
    }

    let codebook = generate_codebook(m, 20, s, &mut stream(0, streams::CODEBOOK))?;
    let first = codebook.codeword(0, 0);
    let energy: f64 = first.values.iter().map(|v| v.norm_sqr()).sum();
    println!("device 0 occupies subcarriers {:?}, energy {energy:.6}", first.positions);

    let stacked = build_sensing_matrix(&codebook, 2, 2);
    println!(
        "N_d=2, M=2 stacking: {} rows, {} columns, block width {}",
        stacked.rows(),
        stacked.devices() * stacked.block_width(),
        stacked.block_width()
    );
    Ok(())
}
