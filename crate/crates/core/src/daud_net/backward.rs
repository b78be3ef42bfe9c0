use super::forward::ForwardCache;
use super::layers::BnBatch;
use super::params::{BatchNorm, NetworkParams};
use super::scalar::{mul_left_transposed, mul_plain, Scalar};
use crate::error::{Error, Result};

/// Gradients of the mean batch cross-entropy with respect to every learnable
/// tensor. Running-statistics fields of the result are zero.
pub fn backward<F: Scalar>(
    params: &NetworkParams<F>,
    cache: &ForwardCache<F>,
    supports: &[Vec<usize>],
) -> Result<NetworkParams<F>> {
    let shape = params.shape;
    let (inp, a, n) = (shape.input_dim, shape.width, shape.outputs);
    let rows = cache.rows;
    if supports.len() != rows {
        return Err(Error::Contract(format!(
            "cache holds {rows} samples but {} supports were given",
            supports.len()
        )));
    }
    if cache.layers.len() != shape.depth
        || cache.input.len() != rows * inp
        || cache.residual.len() != rows * a
        || cache.probs.len() != rows * n
    {
        return Err(Error::Contract("cache does not belong to this network".into()));
    }

    let mut grads = NetworkParams::zeros(shape);
    let inv_rows = F::one() / F::of(rows as f64);

    // Softmax + cross-entropy: d logits = (p_hat - p) / rows.
    let mut d_logits = cache.probs.clone();
    for (row, support) in d_logits.chunks_exact_mut(n).zip(supports) {
        if support.is_empty() || support.iter().any(|&i| i >= n) {
            return Err(Error::InvalidInput(format!("invalid support {support:?}")));
        }
        let target = F::one() / F::of(support.len() as f64);
        for &i in support {
            row[i] = row[i] - target;
        }
        row.iter_mut().for_each(|v| *v = *v * inv_rows);
    }
    mul_left_transposed(&d_logits, &cache.residual, rows, n, a, &mut grads.output.weight);
    column_sums(&d_logits, n, &mut grads.output.bias);

    // `carry` accumulates the gradient reaching the running residual sum; every
    // hidden output and the input-layer output receive all of it.
    let mut carry = vec![F::zero(); rows * a];
    mul_plain(&d_logits, &params.output.weight, rows, n, a, F::zero(), &mut carry);

    let keep = F::of(1.0 / (1.0 - cache.dropout_prob));
    for l in (0..shape.depth).rev() {
        let layer = &cache.layers[l];
        let mut d_pre = vec![F::zero(); rows * a];
        for i in 0..rows * a {
            if layer.mask[i] {
                let da = carry[i] * keep;
                d_pre[i] = da * shape.activation.derivative(layer.normalized_out[i], layer.activated[i]);
            }
        }
        let grad_layer = &mut grads.hidden[l];
        let d_z = bn_backward(&d_pre, a, &layer.bn, &params.hidden[l].bn, &mut grad_layer.bn);
        mul_left_transposed(&d_z, &layer.layer_input, rows, a, a, &mut grad_layer.fc.weight);
        column_sums(&d_z, a, &mut grad_layer.fc.bias);
        mul_plain(&d_z, &params.hidden[l].fc.weight, rows, a, a, F::one(), &mut carry);
    }

    let d_z = bn_backward(&carry, a, &cache.input_bn, &params.input_bn, &mut grads.input_bn);
    mul_left_transposed(&d_z, &cache.input, rows, a, inp, &mut grads.input.weight);
    column_sums(&d_z, a, &mut grads.input.bias);
    Ok(grads)
}

fn column_sums<F: Scalar>(m: &[F], cols: usize, out: &mut [F]) {
    out.iter_mut().for_each(|v| *v = F::zero());
    for row in m.chunks_exact(cols) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o = *o + v;
        }
    }
}

/// Full batch-statistics gradient through a batch-norm site. Writes the scale
/// and shift gradients into `grad` and returns the gradient at its input.
fn bn_backward<F: Scalar>(d_out: &[F], features: usize, stats: &BnBatch<F>, bn: &BatchNorm<F>, grad: &mut BatchNorm<F>) -> Vec<F> {
    let rows = d_out.len() / features;
    let mut sum_d = vec![F::zero(); features];
    let mut sum_dx = vec![F::zero(); features];
    for (d_row, x_row) in d_out.chunks_exact(features).zip(stats.normalized.chunks_exact(features)) {
        for j in 0..features {
            sum_d[j] = sum_d[j] + d_row[j];
            sum_dx[j] = sum_dx[j] + d_row[j] * x_row[j];
        }
    }
    grad.scale.copy_from_slice(&sum_dx);
    grad.shift.copy_from_slice(&sum_d);

    let p = F::of(rows as f64);
    let coef: Vec<F> = (0..features).map(|j| bn.scale[j] * stats.inv_std[j] / p).collect();
    let mut d_in = vec![F::zero(); d_out.len()];
    for (r, (d_row, x_row)) in d_out
        .chunks_exact(features)
        .zip(stats.normalized.chunks_exact(features))
        .enumerate()
    {
        for j in 0..features {
            d_in[r * features + j] = coef[j] * (p * d_row[j] - sum_d[j] - x_row[j] * sum_dx[j]);
        }
    }
    d_in
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::daud_net::forward::{forward, Dropout, Mode};
    use crate::daud_net::layers::batch_cross_entropy;
    use crate::daud_net::params::{Activation, NetworkShape};
    use crate::rng::stream;
    use rand::Rng;

    struct Problem {
        params: NetworkParams<f64>,
        batch: Vec<f64>,
        supports: Vec<Vec<usize>>,
        masks: Vec<Vec<bool>>,
        prob: f64,
    }

    fn problem(activation: Activation, seed: u64) -> Problem {
        let shape = NetworkShape::new(6, 8, 2, 4).unwrap().with_activation(activation);
        let mut rng = stream(seed, 31);
        let mut params: NetworkParams<f64> = NetworkParams::init(shape, &mut rng);
        // Move the batch-norm affine parameters off their trivial defaults.
        for bn in params.batch_norms_mut() {
            bn.scale.iter_mut().for_each(|v| *v = 0.5 + rng.random::<f64>());
            bn.shift.iter_mut().for_each(|v| *v = rng.random::<f64>() - 0.5);
        }
        let rows = 4;
        let batch = (0..rows * 6).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let supports = vec![vec![0, 2], vec![1, 3], vec![3], vec![0, 1, 2]];
        let masks = (0..2)
            .map(|_| (0..rows * 8).map(|_| rng.random::<f64>() > 0.25).collect())
            .collect();
        Problem {
            params,
            batch,
            supports,
            masks,
            prob: 0.25,
        }
    }

    fn loss(p: &Problem, params: &NetworkParams<f64>) -> f64 {
        let mode = Mode::Train(Dropout::Fixed {
            prob: p.prob,
            masks: &p.masks,
        });
        let (probs, _) = forward(params, &p.batch, mode).unwrap();
        batch_cross_entropy(&probs, 4, &p.supports).unwrap()
    }

    fn max_relative_error(p: &Problem) -> f64 {
        let mode = Mode::Train(Dropout::Fixed {
            prob: p.prob,
            masks: &p.masks,
        });
        let (_, cache) = forward(&p.params, &p.batch, mode).unwrap();
        let grads = backward(&p.params, &cache.unwrap(), &p.supports).unwrap();
        let analytic: Vec<Vec<f64>> = grads.trainable().iter().map(|t| t.to_vec()).collect();

        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let count = analytic.len();
        for t in 0..count {
            for i in 0..analytic[t].len() {
                let mut plus = p.params.clone();
                plus.trainable_mut()[t][i] += h;
                let mut minus = p.params.clone();
                minus.trainable_mut()[t][i] -= h;
                let numeric = (loss(p, &plus) - loss(p, &minus)) / (2.0 * h);
                let a = analytic[t][i];
                let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(err);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_central_differences() {
        for act in [Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
            let err = max_relative_error(&problem(act, 1));
            assert!(err <= 1e-4, "{act:?}: max relative error {err}");
        }
    }

    #[test]
    fn permanently_dropped_unit_gets_no_gradient() {
        let mut p = problem(Activation::Relu, 2);
        // Drop hidden unit 3 of the last layer for every sample.
        for r in 0..4 {
            p.masks[1][r * 8 + 3] = false;
        }
        let mode = Mode::Train(Dropout::Fixed {
            prob: p.prob,
            masks: &p.masks,
        });
        let (_, cache) = forward(&p.params, &p.batch, mode).unwrap();
        let g = backward(&p.params, &cache.unwrap(), &p.supports).unwrap();
        let row = &g.hidden[1].fc.weight[3 * 8..4 * 8];
        assert!(row.iter().all(|&v| v == 0.0));
        assert_eq!(g.hidden[1].bn.scale[3], 0.0);
        assert_eq!(g.hidden[1].bn.shift[3], 0.0);
    }

    #[test]
    fn exact_target_gives_zero_logit_gradient() {
        let shape = NetworkShape::new(3, 4, 1, 2).unwrap();
        let mut params: NetworkParams<f64> = NetworkParams::init(shape, &mut stream(3, 1));
        // Zero output weights make the softmax uniform, which is the exact
        // target when both classes are active.
        params.output.weight.iter_mut().for_each(|v| *v = 0.0);
        let batch = vec![0.1, 0.2, 0.3, -0.4, 0.5, 0.6];
        let (_, cache) = forward(&params, &batch, Mode::Train(Dropout::Off)).unwrap();
        let g = backward(&params, &cache.unwrap(), &[vec![0, 1], vec![0, 1]]).unwrap();
        assert!(g.output.bias.iter().all(|v| v.abs() < 1e-10));
        assert!(g.output.weight.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn mismatched_cache_is_a_contract_violation() {
        let p = problem(Activation::Relu, 4);
        let (_, cache) = forward(&p.params, &p.batch, Mode::Train(Dropout::Off)).unwrap();
        let cache = cache.unwrap();
        assert!(matches!(
            backward(&p.params, &cache, &p.supports[..3]),
            Err(Error::Contract(_))
        ));
        let other: NetworkParams<f64> =
            NetworkParams::init(NetworkShape::new(6, 8, 3, 4).unwrap(), &mut stream(1, 1));
        assert!(matches!(
            backward(&other, &cache, &p.supports),
            Err(Error::Contract(_))
        ));
    }
}
