use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::backward::backward;
use super::forward::{forward, predict, Dropout, Mode};
use super::layers::batch_cross_entropy;
use super::params::{NetworkParams, NetworkShape};
use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::rng::{stream, streams, StreamRng};
use crate::signal_model::Sample;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub dropout: f64,
    /// Passes over the data. Pass `r` holds out fold `r mod folds`.
    pub epochs: usize,
    pub bn_momentum: f64,
    /// Set by the caller; pipelines derive one per ensemble member.
    #[serde(skip)]
    pub seed: u64,
    pub ensemble: usize,
    pub folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            batch_size: 64,
            dropout: 0.1,
            epochs: 20,
            bn_momentum: 0.1,
            seed: 0,
            ensemble: 2,
            folds: 5,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.epochs == 0 || self.ensemble == 0 {
            return bad("epochs and ensemble must be positive");
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return bad("bn_momentum must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam decay rates must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossPoint {
    pub iteration: usize,
    pub epoch: usize,
    pub fold: usize,
    pub loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Training loss of every iteration.
    pub loss_curve: Vec<LossPoint>,
    /// Held-out loss at the end of every pass; `iteration` is the last
    /// iteration of that pass.
    pub validation_curve: Vec<LossPoint>,
}

/// Row-major batch matrix of the given samples' inputs.
pub fn stack_inputs<F: Scalar>(samples: &[&Sample]) -> Vec<F> {
    samples
        .iter()
        .flat_map(|s| s.input.iter().map(|&v| F::of(f64::from(v))))
        .collect()
}

/// Forward, backward and one Adam update on a single batch. Running
/// batch-norm statistics are refreshed with `momentum`. Returns the batch loss
/// before the update.
pub fn train_step<F: Scalar>(
    params: &mut NetworkParams<F>,
    state: &mut AdamState<F>,
    batch: &[F],
    supports: &[Vec<usize>],
    config: &TrainConfig,
    rng: &mut StreamRng,
) -> Result<f64> {
    let mode = Mode::Train(if config.dropout > 0.0 {
        Dropout::Sampled {
            prob: config.dropout,
            rng,
        }
    } else {
        Dropout::Off
    });
    let (probs, cache) = forward(params, batch, mode)?;
    let cache = cache.ok_or_else(|| Error::Contract("training pass produced no cache".into()))?;
    let loss = batch_cross_entropy(&probs, params.shape.outputs, supports)?;
    let grads = backward(params, &cache, supports)?;
    adam_step(params, &grads, state, &config.adam());
    let momentum = F::of(config.bn_momentum);
    let stats: Vec<_> = cache.batch_stats().collect();
    for (bn, s) in params.batch_norms_mut().zip(stats) {
        bn.update_running(s, momentum);
    }
    loss.to_f64()
        .ok_or_else(|| Error::Contract("loss is not representable".into()))
}

/// Mean inference-mode cross-entropy over a sample set.
pub fn evaluate_loss<F: Scalar>(params: &NetworkParams<F>, samples: &[&Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty set".into()));
    }
    let probs = predict(params, &stack_inputs::<F>(samples))?;
    let supports: Vec<Vec<usize>> = samples.iter().map(|s| s.support.clone()).collect();
    let loss = batch_cross_entropy(&probs, params.shape.outputs, &supports)?;
    Ok(loss.to_f64().unwrap_or(f64::NAN))
}

fn check_samples(samples: &[Sample], shape: &NetworkShape) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        if s.input.len() != shape.input_dim {
            return Err(Error::Shape(format!(
                "sample {i} has {} inputs, network expects {}",
                s.input.len(),
                shape.input_dim
            )));
        }
        if s.support.is_empty() || s.support.iter().any(|&d| d >= shape.outputs) {
            return Err(Error::InvalidInput(format!("sample {i} has an invalid support")));
        }
    }
    Ok(())
}

/// Trains one network with rotating K-fold validation. Initialization,
/// fold assignment, shuffling and dropout all come from the config seed.
pub fn train<F: Scalar>(
    samples: &[Sample],
    shape: NetworkShape,
    config: &TrainConfig,
) -> Result<(NetworkParams<F>, TrainReport)> {
    shape.validate()?;
    config.validate()?;
    if samples.len() < config.folds * config.batch_size {
        return Err(Error::InvalidConfig(format!(
            "{} samples cannot fill {} folds of batch size {}",
            samples.len(),
            config.folds,
            config.batch_size
        )));
    }
    check_samples(samples, &shape)?;

    let mut rng = stream(config.seed, streams::INIT_BASE);
    let mut params = NetworkParams::<F>::init(shape, &mut rng);
    let mut state = AdamState::new(&params);

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);
    let n = samples.len();
    let folds: Vec<&[usize]> = (0..config.folds)
        .map(|f| &order[f * n / config.folds..(f + 1) * n / config.folds])
        .collect();

    let mut report = TrainReport::default();
    let mut iteration = 0;
    for epoch in 0..config.epochs {
        let held = epoch % config.folds;
        let mut train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != held)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let supports: Vec<Vec<usize>> = batch.iter().map(|s| s.support.clone()).collect();
            let inputs = stack_inputs::<F>(&batch);
            let loss = train_step(&mut params, &mut state, &inputs, &supports, config, &mut rng)?;
            report.loss_curve.push(LossPoint {
                iteration,
                epoch,
                fold: held,
                loss,
            });
            iteration += 1;
        }
        let held_out: Vec<&Sample> = folds[held].iter().map(|&i| &samples[i]).collect();
        report.validation_curve.push(LossPoint {
            iteration: iteration.saturating_sub(1),
            epoch,
            fold: held,
            loss: evaluate_loss(&params, &held_out)?,
        });
    }

    finalize_batch_norm(&mut params, samples, config.batch_size)?;
    Ok((params, report))
}

/// Replaces the running statistics with the average batch statistics over
/// the whole set, computed with dropout off so they match inference.
pub fn finalize_batch_norm<F: Scalar>(params: &mut NetworkParams<F>, samples: &[Sample], batch_size: usize) -> Result<()> {
    let sites = params.shape.bn_sites();
    let width = params.shape.width;
    let mut mean = vec![vec![0.0f64; width]; sites];
    let mut var = vec![vec![0.0f64; width]; sites];
    let mut batches = 0usize;
    let refs: Vec<&Sample> = samples.iter().collect();
    for chunk in refs.chunks(batch_size.max(2)) {
        if chunk.len() < 2 {
            continue;
        }
        let (_, cache) = forward(params, &stack_inputs::<F>(chunk), Mode::Train(Dropout::Off))?;
        let cache = cache.ok_or_else(|| Error::Contract("training pass produced no cache".into()))?;
        for (site, stats) in cache.batch_stats().enumerate() {
            for j in 0..width {
                mean[site][j] += stats.mean[j].to_f64().unwrap_or(0.0);
                var[site][j] += stats.var[j].to_f64().unwrap_or(0.0);
            }
        }
        batches += 1;
    }
    if batches == 0 {
        return Ok(());
    }
    let b = batches as f64;
    for (site, bn) in params.batch_norms_mut().enumerate() {
        for j in 0..width {
            bn.running_mean[j] = F::of(mean[site][j] / b);
            bn.running_var[j] = F::of(var[site][j] / b);
        }
    }
    Ok(())
}
