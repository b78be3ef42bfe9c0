//! Trains a two-member ensemble through the harness and compares each member
//! with the averaged ensemble on the same test instances.

use gfna::daud_net::{ensemble_predict, predict, select_support};
use gfna::harness::{success_probability, test_instances, train_ensemble, ExperimentConfig};
use gfna::signal_model::{real_split, Environment};

fn main() -> gfna::Result<()> {
    let mut config = ExperimentConfig::default();
    config.data.samples = 20_000;
    config.train.epochs = 4;
    let env = Environment::new(config.scenario.clone())?;
    let members = train_ensemble(&config, &env)?;
    let models: Vec<_> = members.iter().map(|m| m.params.clone()).collect();

    let (_, instances) = test_instances(&env, 20.0, 2000, config.seed)?;
    let inputs: Vec<f32> = instances
        .iter()
        .flat_map(|i| real_split(&i.y).into_iter().map(|v| v as f32))
        .collect();
    let k = config.scenario.active;
    let n = config.scenario.devices;
    let score = |supports: &[Vec<usize>]| -> gfna::Result<f64> {
        let mut total = 0.0;
        for (s, inst) in supports.iter().zip(&instances) {
            total += success_probability(s, &inst.support)?;
        }
        Ok(total / instances.len() as f64)
    };

    for (e, model) in models.iter().enumerate() {
        let probs = predict(model, &inputs)?;
        let supports = probs.chunks(n).map(|row| select_support(row, k)).collect::<gfna::Result<Vec<_>>>()?;
        println!("member {e}: P_succ {:.3}", score(&supports)?);
    }
    let (_, supports) = ensemble_predict(&models, &inputs, k)?;
    println!("ensemble of {}: P_succ {:.3}", models.len(), score(&supports)?);
    Ok(())
}
