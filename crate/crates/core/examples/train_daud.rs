//! Trains a small detector, prints its loss curve summary, saves a
//! checkpoint and checks the reloaded model predicts identically.

use gfna::daud_net::{predict, read_checkpoint, select_support, stack_inputs, train, write_checkpoint, NetworkShape, TrainConfig};
use gfna::harness::success_probability;
use gfna::rng::streams;
use gfna::signal_model::{collect_dataset, AudScenario, Environment, GeometryPolicy, Sample};

fn main() -> gfna::Result<()> {
    let scenario = AudScenario {
        geometry: GeometryPolicy::Normalized { distance_km: 0.5 },
        ..AudScenario::desk()
    };
    let env = Environment::new(scenario.clone())?;
    let data = collect_dataset(&env, 20_000, 0, streams::TRAIN_BASE)?;
    let shape = NetworkShape::new(scenario.input_dim(), 128, 3, scenario.devices)?;
    let config = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let (params, report) = train::<f32>(&data, shape, &config)?;

    for point in &report.validation_curve {
        println!("pass {:>2} (held-out fold {}): validation loss {:.4}", point.epoch, point.fold, point.loss);
    }

    let test_env = Environment::new(scenario.with_snr_db(20.0))?;
    let test = collect_dataset(&test_env, 2000, 0, streams::TEST_BASE)?;
    let refs: Vec<&Sample> = test.iter().collect();
    let probs = predict(&params, &stack_inputs::<f32>(&refs))?;
    let mut score = 0.0;
    for (row, sample) in probs.chunks(scenario.devices).zip(&test) {
        score += success_probability(&select_support(row, scenario.active)?, &sample.support)?;
    }
    println!("P_succ at 20 dB: {:.3}", score / test.len() as f64);

    let dir = std::env::temp_dir().join("gfna_train_daud");
    std::fs::create_dir_all(&dir).map_err(|e| gfna::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("model.daud");
    write_checkpoint(&path, &params)?;
    let reloaded = read_checkpoint::<f32>(&path)?;
    let again = predict(&reloaded, &stack_inputs::<f32>(&refs))?;
    println!("checkpoint {} reloads bit-identically: {}", path.display(), again == probs);
    Ok(())
}
