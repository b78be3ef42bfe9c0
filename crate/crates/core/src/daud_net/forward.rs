use super::layers::{apply_dropout, batch_norm_eval, batch_norm_train, dropout_mask, softmax_rows, BnBatch};
use super::params::NetworkParams;
use super::scalar::{mul_transposed, Scalar};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// How hidden-layer dropout behaves during a training-mode pass.
pub enum Dropout<'a> {
    Off,
    Sampled { prob: f64, rng: &'a mut StreamRng },
    /// Caller-supplied keep-masks, one `rows x width` mask per hidden layer.
    Fixed { prob: f64, masks: &'a [Vec<bool>] },
}

pub enum Mode<'a> {
    /// Running batch-norm statistics, no dropout, no cache.
    Eval,
    /// Batch statistics and the given dropout; produces a cache for backward.
    Train(Dropout<'a>),
}

#[derive(Clone, Debug)]
pub(crate) struct LayerCache<F> {
    /// Residual sum fed into this layer's FC.
    pub layer_input: Vec<F>,
    /// Batch-norm output, i.e. the activation's input.
    pub normalized_out: Vec<F>,
    pub activated: Vec<F>,
    pub mask: Vec<bool>,
    pub bn: BnBatch<F>,
}

/// Intermediate values of a training-mode pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<F> {
    pub(crate) rows: usize,
    pub(crate) input: Vec<F>,
    pub(crate) input_bn: BnBatch<F>,
    pub(crate) layers: Vec<LayerCache<F>>,
    /// Input plus every hidden-layer output: what the output layer consumes.
    pub(crate) residual: Vec<F>,
    pub(crate) dropout_prob: f64,
    pub probs: Vec<F>,
}

impl<F> ForwardCache<F> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Batch-norm statistics per site, input site first.
    pub fn batch_stats(&self) -> impl Iterator<Item = &BnBatch<F>> {
        std::iter::once(&self.input_bn).chain(self.layers.iter().map(|l| &l.bn))
    }
}

fn affine<F: Scalar>(x: &[F], rows: usize, weight: &[F], bias: &[F], inputs: usize, outputs: usize) -> Vec<F> {
    let mut out = vec![F::zero(); rows * outputs];
    mul_transposed(x, weight, rows, inputs, outputs, &mut out);
    for row in out.chunks_exact_mut(outputs) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v = *v + b;
        }
    }
    out
}

/// Runs a batch (`rows x input_dim`, row-major) through the network and
/// returns the softmax rows, plus the cache in training mode.
pub fn forward<F: Scalar>(
    params: &NetworkParams<F>,
    batch: &[F],
    mode: Mode<'_>,
) -> Result<(Vec<F>, Option<ForwardCache<F>>)> {
    let shape = params.shape;
    let (inp, a, n) = (shape.input_dim, shape.width, shape.outputs);
    if batch.is_empty() || batch.len() % inp != 0 {
        return Err(Error::Shape(format!(
            "batch length {} is not a positive multiple of input dimension {inp}",
            batch.len()
        )));
    }
    let rows = batch.len() / inp;

    let mut dropout = match mode {
        Mode::Eval => None,
        Mode::Train(d) => {
            if rows < 2 {
                return Err(Error::InvalidBatch(
                    "training-mode forward needs at least two samples".into(),
                ));
            }
            if let Dropout::Fixed { masks, .. } = &d {
                if masks.len() != shape.depth || masks.iter().any(|m| m.len() != rows * a) {
                    return Err(Error::Shape("fixed dropout masks do not match the batch".into()));
                }
            }
            Some(d)
        }
    };
    let train = dropout.is_some();

    let pre = affine(batch, rows, &params.input.weight, &params.input.bias, inp, a);
    let (mut residual, input_bn) = if train {
        let (out, stats) = batch_norm_train(&pre, a, &params.input_bn)?;
        (out, Some(stats))
    } else {
        (batch_norm_eval(&pre, a, &params.input_bn)?, None)
    };

    let mut layers = Vec::with_capacity(if train { shape.depth } else { 0 });
    for (l, layer) in params.hidden.iter().enumerate() {
        let z = affine(&residual, rows, &layer.fc.weight, &layer.fc.bias, a, a);
        let (normalized_out, stats) = if train {
            let (out, stats) = batch_norm_train(&z, a, &layer.bn)?;
            (out, Some(stats))
        } else {
            (batch_norm_eval(&z, a, &layer.bn)?, None)
        };
        let activated: Vec<F> = normalized_out.iter().map(|&v| shape.activation.apply(v)).collect();
        let (dropped, mask) = match dropout.as_mut() {
            None | Some(Dropout::Off) => (activated.clone(), Vec::new()),
            Some(Dropout::Sampled { prob, rng }) => {
                let mask = dropout_mask(rows * a, *prob, *rng);
                (apply_dropout(&activated, &mask, *prob), mask)
            }
            Some(Dropout::Fixed { prob, masks }) => {
                (apply_dropout(&activated, &masks[l], *prob), masks[l].clone())
            }
        };
        let next: Vec<F> = residual.iter().zip(&dropped).map(|(&r, &d)| r + d).collect();
        if let Some(bn) = stats {
            layers.push(LayerCache {
                layer_input: residual,
                normalized_out,
                activated,
                mask: if mask.is_empty() { vec![true; rows * a] } else { mask },
                bn,
            });
        }
        residual = next;
    }

    let logits = affine(&residual, rows, &params.output.weight, &params.output.bias, a, n);
    let probs = softmax_rows(&logits, n);

    let cache = input_bn.map(|input_bn| ForwardCache {
        rows,
        input: batch.to_vec(),
        input_bn,
        layers,
        residual,
        dropout_prob: match dropout {
            Some(Dropout::Sampled { prob, .. }) | Some(Dropout::Fixed { prob, .. }) => prob,
            _ => 0.0,
        },
        probs: probs.clone(),
    });
    Ok((probs, cache))
}

/// Inference in chunks so large evaluation sets do not allocate one huge batch.
pub fn predict<F: Scalar>(params: &NetworkParams<F>, inputs: &[F]) -> Result<Vec<F>> {
    const CHUNK_ROWS: usize = 1024;
    let inp = params.shape.input_dim;
    let mut out = Vec::with_capacity(inputs.len() / inp.max(1) * params.shape.outputs);
    for chunk in inputs.chunks(CHUNK_ROWS * inp) {
        out.extend(forward(params, chunk, Mode::Eval)?.0);
    }
    Ok(out)
}
