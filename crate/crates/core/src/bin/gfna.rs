use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use log::info;

use gfna::complexity::{complexity_table, table1_report};
use gfna::harness::{self, ExperimentConfig};
use gfna::Error;

/// Grant-free NOMA active-user detection experiments.
///
/// Exit status: 0 on success, 1 on a configuration error (including bad
/// flags), 2 on a runtime failure.
#[derive(Parser, Debug)]
#[command(name = "gfna", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config in TOML. Missing sections use desk-scale defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed, overriding `seed` in the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory, overriding `out_dir` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic training set to `<out>/train.gfna`.
    GenData,
    /// Train the detector ensemble; writes checkpoints, loss curves and a manifest.
    Train,
    /// Train one detector per sparsity level and calibrate thresholds.
    Bank,
    /// Run the Monte Carlo sweep; writes sweep.csv, sweep_timing.csv and sweep.svg.
    Sweep,
    /// Print the analytical flop counts as text and write flops.csv.
    Flops {
        /// Use the reference setting (N=80, m=40, width 500, depth 6, k in {6, 8, 10})
        /// instead of the config's scenario and network.
        #[arg(long)]
        table1: bool,
    },
    /// Score blind sparsity estimation with a trained bank; writes estimate.csv.
    Estimate,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_configuration() { 1 } else { 2 })
        }
    }
}

fn load_config(common: &Common) -> gfna::Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> gfna::Result<()> {
    harness::init_thread_pool()?;
    let config = load_config(&cli.common)?;
    let out = config.out_dir.clone();
    match cli.command {
        Command::GenData => {
            let path = harness::gen_data(&config, &out)?;
            info!("wrote {}", path.display());
        }
        Command::Train => {
            let manifest = harness::train_pipeline(&config, &out)?;
            for m in &manifest.members {
                println!("{}\t{}", m.checkpoint.display(), m.sha256);
            }
        }
        Command::Bank => {
            let (_, manifest) = harness::bank_pipeline(&config, &out)?;
            for level in &manifest.levels {
                println!("k={}\ttau={:.6}\t{}", level.sparsity, level.tau, level.checkpoint.display());
            }
        }
        Command::Sweep => {
            let rows = harness::run_sweep(&config, &out)?;
            for r in &rows {
                println!(
                    "{}={}\t{}\tP_succ={:.4} ± {:.4}",
                    r.axis, r.value, r.algorithm, r.p_succ, r.ci_half_width
                );
            }
        }
        Command::Flops { table1 } => {
            let table = if table1 {
                table1_report()
            } else {
                complexity_table(
                    config.scenario.devices,
                    config.scenario.subcarriers,
                    config.network.width,
                    config.network.depth,
                    &config.estimate.sparsity,
                )?
            };
            print!("{}", table.render_text());
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let path = out.join("flops.csv");
            std::fs::write(&path, table.to_csv()).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            info!("wrote {}", path.display());
        }
        Command::Estimate => {
            let rows = harness::run_estimate(&config, &out)?;
            for r in &rows {
                println!(
                    "k={}\texact={:.4}\tunresolved={}\tP_succ={:.4}",
                    r.true_sparsity, r.exact_rate, r.unresolved, r.p_succ
                );
            }
        }
    }
    Ok(())
}
