//! Fully connected network with logistic units and one logistic output,
//! trained on cross-entropy by per-sample gradient descent with momentum.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, momentum: 0.9, epochs: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub hidden: Vec<usize>,
    pub layers: Vec<Layer>,
    pub seed: u64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl MlpModel {
    /// Uniform ±1/√fan_in initialisation for weights and biases.
    pub fn init(inputs: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        if inputs == 0 || hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidClassifierParams(format!("layout {inputs} -> {hidden:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let r = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: (0..w[0] * w[1]).map(|_| rng.gen_range(-r..=r)).collect(),
                    bias: (0..w[1]).map(|_| rng.gen_range(-r..=r)).collect(),
                }
            })
            .collect();
        Ok(Self { hidden: hidden.to_vec(), layers, seed })
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Activations of every layer, input first.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for l in &self.layers {
            let prev = acts.last().unwrap();
            let out = (0..l.outputs)
                .map(|o| sigmoid(l.bias[o] + l.weights[o * l.inputs..(o + 1) * l.inputs].iter().zip(prev).map(|(w, a)| w * a).sum::<f64>()))
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn output(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.inputs() {
            return Err(Error::DimensionMismatch { expected: self.inputs(), got: x.len() });
        }
        Ok(self.forward(x).last().unwrap()[0])
    }

    /// Adds the cross-entropy gradient of one sample into `grad` (flat layout:
    /// per layer weights then biases) and returns the sample loss.
    fn accumulate(&self, x: &[f64], label: u8, grad: &mut [f64]) -> f64 {
        let acts = self.forward(x);
        let p = acts.last().unwrap()[0];
        let t = f64::from(label);
        let loss = -(t * p.max(1e-300).ln() + (1.0 - t) * (1.0 - p).max(1e-300).ln());
        // sigmoid output with cross-entropy: dL/dz = p - t
        let mut delta = vec![p - t];
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weights.len() + l.bias.len();
        }
        for (li, l) in self.layers.iter().enumerate().rev() {
            let a_in = &acts[li];
            let base = offsets[li];
            for o in 0..l.outputs {
                for i in 0..l.inputs {
                    grad[base + o * l.inputs + i] += delta[o] * a_in[i];
                }
                grad[base + l.weights.len() + o] += delta[o];
            }
            if li > 0 {
                delta = (0..l.inputs)
                    .map(|i| {
                        let s: f64 = (0..l.outputs).map(|o| l.weights[o * l.inputs + i] * delta[o]).sum();
                        s * a_in[i] * (1.0 - a_in[i])
                    })
                    .collect();
            }
        }
        loss
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = p[k];
                k += 1;
            }
        }
    }

    /// Summed cross-entropy over the set and its gradient in the flat
    /// parameter order.
    pub fn loss_and_gradient(&self, rows: &[Vec<f64>], labels: &[u8]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.parameter_count()];
        let loss = rows.iter().zip(labels).map(|(x, &t)| self.accumulate(x, t, &mut grad)).sum();
        (loss, grad)
    }

    pub fn loss(&self, rows: &[Vec<f64>], labels: &[u8]) -> f64 {
        rows.iter()
            .zip(labels)
            .map(|(x, &t)| {
                let p = self.forward(x).last().unwrap()[0];
                let t = f64::from(t);
                -(t * p.max(1e-300).ln() + (1.0 - t) * (1.0 - p).max(1e-300).ln())
            })
            .sum()
    }
}

pub fn train_mlp(rows: &[Vec<f64>], labels: &[u8], hidden: &[usize], seed: u64, cfg: &MlpConfig) -> Result<MlpModel> {
    let dim = rows.first().map_or(0, |r| r.len());
    let mut model = MlpModel::init(dim, hidden, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_0d3a);
    let mut params = model.parameters();
    let mut velocity = vec![0.0; params.len()];
    let mut grad = vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.accumulate(&rows[i], labels[i], &mut grad);
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
            model.set_parameters(&params);
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidClassifierParams("MLP weights diverged".into()));
    }
    Ok(model)
}
