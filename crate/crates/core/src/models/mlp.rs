use serde::{Deserialize, Serialize};

use super::train::{cross_entropy, gradient_descent, TrainingMeta};
use super::{require_both_classes, sigmoid, InitLaw, Model, ParameterBlock};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::RunSeed;

/// Fully connected layer; `weights` is `n_out x n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn apply(&self, input: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
                self.bias[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    /// `W^T delta`.
    fn back(&self, delta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_in];
        for (o, d) in delta.iter().enumerate() {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            for (acc, w) in out.iter_mut().zip(row) {
                *acc += w * d;
            }
        }
        out
    }
}

/// Multi-layer perceptron with tanh hidden units and a single sigmoid
/// output. With no hidden layers it is a logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
    #[serde(default)]
    pub training: Option<TrainingMeta>,
}

impl MlpModel {
    /// Random initialization for `n_features -> hidden... -> 1`.
    pub fn init(n_features: usize, hidden: &[usize], seed: RunSeed) -> MlpModel {
        let mut sizes = vec![n_features];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (n_in, n_out) = (w[0], w[1]);
                let law = InitLaw::GlorotNormal {
                    fan_in: n_in,
                    fan_out: n_out,
                    n_bias: n_out,
                };
                let values = law.draw(n_in * n_out + n_out, &mut seed.derive_stream("models/init", l as u64));
                DenseLayer {
                    n_in,
                    n_out,
                    weights: values[..n_in * n_out].to_vec(),
                    bias: values[n_in * n_out..].to_vec(),
                }
            })
            .collect();
        MlpModel { layers, training: None }
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Inputs to every layer; the last entry is the output margin.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = layer.apply(acts.last().expect("input pushed"));
            if l + 1 < self.layers.len() {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        acts
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layers.iter().map(DenseLayer::n_params).sum());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    fn unflatten(&mut self, params: &[f64]) {
        let mut at = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&params[at..at + nb]);
            at += nb;
        }
    }

    /// Mean cross-entropy and its parameter gradient (flattened layout).
    fn loss_and_grad(&self, ds: &Dataset, want_grad: bool) -> (f64, Vec<f64>) {
        let n = ds.n_instances();
        let mut grad = if want_grad { vec![0.0; self.flatten().len()] } else { Vec::new() };
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |acc, l| {
                let start = *acc;
                *acc += l.n_params();
                Some(start)
            })
            .collect();
        let mut loss = 0.0;
        for i in 0..n {
            let acts = self.forward(ds.row(i));
            let z = acts.last().expect("output")[0];
            let y = ds.labels()[i];
            loss += cross_entropy(z, y);
            if !want_grad {
                continue;
            }
            let mut delta = vec![(sigmoid(z) - f64::from(y)) / n as f64];
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &acts[l];
                let base = offsets[l];
                for (o, d) in delta.iter().enumerate() {
                    for (k, v) in input.iter().enumerate() {
                        grad[base + o * layer.n_in + k] += d * v;
                    }
                    grad[base + layer.weights.len() + o] += d;
                }
                if l > 0 {
                    let back = layer.back(&delta);
                    delta = back.iter().zip(input).map(|(b, a)| b * (1.0 - a * a)).collect();
                }
            }
        }
        (loss / n as f64, grad)
    }

    pub(crate) fn parameter_blocks(&self) -> Vec<ParameterBlock> {
        self.layers
            .iter()
            .enumerate()
            .map(|(l, layer)| ParameterBlock {
                name: format!("layer{l}"),
                values: layer.weights.iter().chain(&layer.bias).copied().collect(),
                init: InitLaw::GlorotNormal {
                    fan_in: layer.n_in,
                    fan_out: layer.n_out,
                    n_bias: layer.n_out,
                },
            })
            .collect()
    }

    pub(crate) fn set_parameter_block(&mut self, index: usize, values: &[f64]) -> Result<()> {
        let layer = self
            .layers
            .get_mut(index)
            .ok_or_else(|| Error::validation(format!("no layer {index}")))?;
        if values.len() != layer.n_params() {
            return Err(Error::validation(format!(
                "layer {index} has {} parameters, got {}",
                layer.n_params(),
                values.len()
            )));
        }
        let nw = layer.weights.len();
        layer.weights.copy_from_slice(&values[..nw]);
        layer.bias.copy_from_slice(&values[nw..]);
        Ok(())
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::validation("MLP needs at least one layer"));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.len() != layer.n_in * layer.n_out || layer.bias.len() != layer.n_out {
                return Err(Error::validation(format!("layer {l} has inconsistent shapes")));
            }
            if l > 0 && self.layers[l - 1].n_out != layer.n_in {
                return Err(Error::validation(format!("layer {l} input does not match previous output")));
            }
        }
        if self.layers.last().map(|l| l.n_out) != Some(1) {
            return Err(Error::validation("MLP output layer must have one unit"));
        }
        Ok(())
    }
}

impl Model for MlpModel {
    fn n_features(&self) -> usize {
        self.layers[0].n_in
    }

    fn predict_margin(&self, x: &[f64]) -> f64 {
        self.forward(x).last().expect("output")[0]
    }

    fn margin_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let acts = self.forward(x);
        let mut delta = vec![1.0];
        for l in (0..self.layers.len()).rev() {
            let back = self.layers[l].back(&delta);
            delta = if l > 0 {
                back.iter().zip(&acts[l]).map(|(b, a)| b * (1.0 - a * a)).collect()
            } else {
                back
            };
        }
        Some(delta)
    }
}

/// Same as [`fit_mlp`], also returning the per-epoch loss.
pub fn fit_mlp_traced(
    ds: &Dataset,
    hidden_sizes: &[usize],
    lr: f64,
    epochs: usize,
    seed: RunSeed,
) -> Result<(MlpModel, Vec<f64>)> {
    if ds.n_instances() < 2 {
        return Err(Error::validation("MLP training needs at least two rows"));
    }
    require_both_classes(ds)?;
    if hidden_sizes.contains(&0) {
        return Err(Error::validation("hidden layers must have at least one unit"));
    }
    let mut model = MlpModel::init(ds.n_features(), hidden_sizes, seed);
    let mut params = model.flatten();
    let mut scratch = model.clone();
    let history = gradient_descent(&mut params, lr, epochs, |p, want_grad| {
        scratch.unflatten(p);
        scratch.loss_and_grad(ds, want_grad)
    })?;
    model.unflatten(&params);
    model.training = Some(TrainingMeta {
        epochs,
        learning_rate: lr,
        l2: 0.0,
        seed: seed.master(),
        initial_loss: history[0],
        final_loss: *history.last().expect("history has the initial loss"),
    });
    Ok((model, history))
}

/// Full-batch gradient descent with backpropagation on mean cross-entropy.
pub fn fit_mlp(ds: &Dataset, hidden_sizes: &[usize], lr: f64, epochs: usize, seed: RunSeed) -> Result<MlpModel> {
    fit_mlp_traced(ds, hidden_sizes, lr, epochs, seed).map(|(m, _)| m)
}
