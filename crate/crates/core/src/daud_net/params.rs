use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Nonlinearity used inside the hidden blocks. ReLU is the default; the
/// others exist for hyperparameter sweeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn code(self) -> u32 {
        match self {
            Activation::Relu => 0,
            Activation::Sigmoid => 1,
            Activation::Tanh => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Sigmoid),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }

    pub fn apply<F: Scalar>(self, v: F) -> F {
        match self {
            Activation::Relu => v.max(F::zero()),
            Activation::Sigmoid => F::one() / (F::one() + (-v).exp()),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative expressed through the activation's input `v` and output `a`.
    pub fn derivative<F: Scalar>(self, v: F, a: F) -> F {
        match self {
            Activation::Relu => {
                if v > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Activation::Sigmoid => a * (F::one() - a),
            Activation::Tanh => F::one() - a * a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub input_dim: usize,
    pub width: usize,
    pub depth: usize,
    pub outputs: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl NetworkShape {
    pub fn new(input_dim: usize, width: usize, depth: usize, outputs: usize) -> Result<Self> {
        let shape = NetworkShape {
            input_dim,
            width,
            depth,
            outputs,
            activation: Activation::Relu,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.width == 0 || self.depth == 0 || self.outputs == 0 {
            return Err(Error::InvalidConfig(format!(
                "network dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// One batch-norm site after the input layer plus one per hidden layer.
    pub fn bn_sites(&self) -> usize {
        self.depth + 1
    }

    /// Number of learnable scalars (running statistics excluded).
    pub fn parameter_count(&self) -> usize {
        let (i, a, l, n) = (self.input_dim, self.width, self.depth, self.outputs);
        a * i + a + l * (a * a + a) + n * a + n + 2 * a * self.bn_sites()
    }
}

/// Fully connected layer, weight stored row-major as `outputs x inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<F> {
    pub weight: Vec<F>,
    pub bias: Vec<F>,
    pub inputs: usize,
    pub outputs: usize,
}

impl<F: Scalar> Dense<F> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: vec![F::zero(); inputs * outputs],
            bias: vec![F::zero(); outputs],
            inputs,
            outputs,
        }
    }

    fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let weight = (0..inputs * outputs)
            .map(|_| F::of(rng.random_range(-bound..bound)))
            .collect();
        Dense {
            weight,
            bias: vec![F::zero(); outputs],
            inputs,
            outputs,
        }
    }
}

/// Per-feature batch-norm parameters. `scale` multiplies the standardized
/// value and `shift` is added afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<F> {
    pub scale: Vec<F>,
    pub shift: Vec<F>,
    pub running_mean: Vec<F>,
    pub running_var: Vec<F>,
}

impl<F: Scalar> BatchNorm<F> {
    pub fn identity(features: usize) -> Self {
        BatchNorm {
            scale: vec![F::one(); features],
            shift: vec![F::zero(); features],
            running_mean: vec![F::zero(); features],
            running_var: vec![F::one(); features],
        }
    }

    fn zeros(features: usize) -> Self {
        BatchNorm {
            scale: vec![F::zero(); features],
            shift: vec![F::zero(); features],
            running_mean: vec![F::zero(); features],
            running_var: vec![F::zero(); features],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenLayer<F> {
    pub fc: Dense<F>,
    pub bn: BatchNorm<F>,
}

/// All network tensors. The same struct doubles as the gradient container,
/// in which case the running statistics are unused and stay zero.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams<F> {
    pub shape: NetworkShape,
    pub input: Dense<F>,
    pub input_bn: BatchNorm<F>,
    pub hidden: Vec<HiddenLayer<F>>,
    pub output: Dense<F>,
}

impl<F: Scalar> NetworkParams<F> {
    pub fn init<R: Rng + ?Sized>(shape: NetworkShape, rng: &mut R) -> Self {
        let a = shape.width;
        let input = Dense::init(shape.input_dim, a, rng);
        let hidden = (0..shape.depth)
            .map(|_| HiddenLayer {
                fc: Dense::init(a, a, rng),
                bn: BatchNorm::identity(a),
            })
            .collect();
        let output = Dense::init(a, shape.outputs, rng);
        NetworkParams {
            shape,
            input,
            input_bn: BatchNorm::identity(a),
            hidden,
            output,
        }
    }

    /// A zero-filled container with this shape, used for gradients.
    pub fn zeros(shape: NetworkShape) -> Self {
        let a = shape.width;
        NetworkParams {
            shape,
            input: Dense::zeros(shape.input_dim, a),
            input_bn: BatchNorm::zeros(a),
            hidden: (0..shape.depth)
                .map(|_| HiddenLayer {
                    fc: Dense::zeros(a, a),
                    bn: BatchNorm::zeros(a),
                })
                .collect(),
            output: Dense::zeros(a, shape.outputs),
        }
    }

    pub fn batch_norms(&self) -> impl Iterator<Item = &BatchNorm<F>> {
        std::iter::once(&self.input_bn).chain(self.hidden.iter().map(|h| &h.bn))
    }

    pub fn batch_norms_mut(&mut self) -> impl Iterator<Item = &mut BatchNorm<F>> {
        std::iter::once(&mut self.input_bn).chain(self.hidden.iter_mut().map(|h| &mut h.bn))
    }

    /// Every tensor with its checkpoint name, in declaration order.
    pub fn named_tensors(&self) -> Vec<(String, &[F])> {
        let mut out: Vec<(String, &[F])> = vec![
            ("input.weight".into(), &self.input.weight),
            ("input.bias".into(), &self.input.bias),
        ];
        push_bn(&mut out, "input_bn", &self.input_bn);
        for (l, layer) in self.hidden.iter().enumerate() {
            out.push((format!("hidden.{l}.weight"), &layer.fc.weight));
            out.push((format!("hidden.{l}.bias"), &layer.fc.bias));
            push_bn(&mut out, &format!("hidden.{l}.bn"), &layer.bn);
        }
        out.push(("output.weight".into(), &self.output.weight));
        out.push(("output.bias".into(), &self.output.bias));
        out
    }

    /// Mutable views in the same order as [`Self::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<F>> {
        let mut out = vec![&mut self.input.weight, &mut self.input.bias];
        let bn = &mut self.input_bn;
        out.extend([&mut bn.scale, &mut bn.shift, &mut bn.running_mean, &mut bn.running_var]);
        for layer in &mut self.hidden {
            out.push(&mut layer.fc.weight);
            out.push(&mut layer.fc.bias);
            let bn = &mut layer.bn;
            out.extend([&mut bn.scale, &mut bn.shift, &mut bn.running_mean, &mut bn.running_var]);
        }
        out.push(&mut self.output.weight);
        out.push(&mut self.output.bias);
        out
    }

    /// Learnable tensors only (running statistics excluded), in a fixed order.
    pub fn trainable(&self) -> Vec<&[F]> {
        let mut out: Vec<&[F]> = vec![&self.input.weight, &self.input.bias];
        out.extend([&self.input_bn.scale[..], &self.input_bn.shift[..]]);
        for layer in &self.hidden {
            out.extend([&layer.fc.weight[..], &layer.fc.bias[..], &layer.bn.scale[..], &layer.bn.shift[..]]);
        }
        out.extend([&self.output.weight[..], &self.output.bias[..]]);
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut Vec<F>> {
        let mut out = vec![&mut self.input.weight, &mut self.input.bias];
        out.extend([&mut self.input_bn.scale, &mut self.input_bn.shift]);
        for layer in &mut self.hidden {
            out.extend([
                &mut layer.fc.weight,
                &mut layer.fc.bias,
                &mut layer.bn.scale,
                &mut layer.bn.shift,
            ]);
        }
        out.extend([&mut self.output.weight, &mut self.output.bias]);
        out
    }

    pub fn cast<G: Scalar>(&self) -> NetworkParams<G> {
        let conv = |v: &[F]| -> Vec<G> { v.iter().map(|x| G::of(x.to_f64().unwrap_or(0.0))).collect() };
        let dense = |d: &Dense<F>| Dense {
            weight: conv(&d.weight),
            bias: conv(&d.bias),
            inputs: d.inputs,
            outputs: d.outputs,
        };
        let bn = |b: &BatchNorm<F>| BatchNorm {
            scale: conv(&b.scale),
            shift: conv(&b.shift),
            running_mean: conv(&b.running_mean),
            running_var: conv(&b.running_var),
        };
        NetworkParams {
            shape: self.shape,
            input: dense(&self.input),
            input_bn: bn(&self.input_bn),
            hidden: self
                .hidden
                .iter()
                .map(|h| HiddenLayer {
                    fc: dense(&h.fc),
                    bn: bn(&h.bn),
                })
                .collect(),
            output: dense(&self.output),
        }
    }
}

fn push_bn<'a, F>(out: &mut Vec<(String, &'a [F])>, prefix: &str, bn: &'a BatchNorm<F>) {
    out.push((format!("{prefix}.scale"), &bn.scale));
    out.push((format!("{prefix}.shift"), &bn.shift));
    out.push((format!("{prefix}.running_mean"), &bn.running_mean));
    out.push((format!("{prefix}.running_var"), &bn.running_var));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn init_follows_the_documented_defaults() {
        let shape = NetworkShape::new(6, 8, 2, 4).unwrap();
        let p: NetworkParams<f64> = NetworkParams::init(shape, &mut stream(1, 1));
        let bound = 1.0 / 6f64.sqrt();
        assert!(p.input.weight.iter().all(|w| w.abs() <= bound));
        assert!(p.input.bias.iter().all(|&b| b == 0.0));
        for bn in p.batch_norms() {
            assert!(bn.scale.iter().all(|&s| s == 1.0));
            assert!(bn.shift.iter().all(|&s| s == 0.0));
            assert!(bn.running_mean.iter().all(|&s| s == 0.0));
            assert!(bn.running_var.iter().all(|&s| s == 1.0));
        }
        let learnable: usize = p.trainable().iter().map(|t| t.len()).sum();
        assert_eq!(learnable, shape.parameter_count());
        assert_eq!(p.named_tensors().len(), p.clone().tensors_mut().len());
    }

    #[test]
    fn zero_dimensions_are_rejected() {
        assert!(NetworkShape::new(0, 8, 2, 4).is_err());
        assert!(NetworkShape::new(6, 8, 0, 4).is_err());
    }
}
