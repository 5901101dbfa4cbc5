use rand::Rng;

use crate::activation::tanh;

/// Fully connected layer, weights row-major `[outputs][inputs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn uniform<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw = || rng.random_range(-bound..=bound);
        let weights = (0..inputs * outputs).map(|_| draw()).collect();
        let biases = (0..outputs).map(|_| draw()).collect();
        Self {
            inputs,
            outputs,
            weights,
            biases,
        }
    }

    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.biases))
        {
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            *o = tanh(z);
        }
    }
}

/// Multilayer perceptron with tanh on every layer, scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Reusable buffers for forward and backward passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    activations: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Per-parameter gradient, same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<Layer>,
}

impl MlpGrad {
    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|&g| g == 0.0))
    }

    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

fn flatten(layers: &[Layer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

impl Mlp {
    /// `sizes` = [inputs, hidden..., 1].
    pub fn uniform<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Layer::uniform(w[0], w[1], rng)).collect(),
        }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    fn max_width(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.outputs.max(l.inputs))
            .max()
            .unwrap_or(1)
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut a = Vec::with_capacity(self.max_width());
        let mut b = Vec::with_capacity(self.max_width());
        self.forward_buffered(x, &mut a, &mut b)
    }

    pub fn forward_with(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        self.forward_buffered(x, &mut ws.a, &mut ws.b)
    }

    fn forward_buffered(&self, x: &[f64], a: &mut Vec<f64>, b: &mut Vec<f64>) -> f64 {
        a.clear();
        a.extend_from_slice(x);
        for layer in &self.layers {
            b.clear();
            b.resize(layer.outputs, 0.0);
            layer.forward_into(a, b);
            std::mem::swap(a, b);
        }
        a[0]
    }

    /// Mean squared error over `inputs` (row-major, one row per sample).
    pub fn loss(&self, inputs: &[f64], targets: &[f64]) -> f64 {
        self.loss_with(inputs, targets, &mut Workspace::default())
    }

    pub fn loss_with(&self, inputs: &[f64], targets: &[f64], ws: &mut Workspace) -> f64 {
        let width = self.input_width();
        let sum: f64 = inputs
            .chunks_exact(width)
            .zip(targets)
            .map(|(x, t)| {
                let e = self.forward_buffered(x, &mut ws.a, &mut ws.b) - t;
                e * e
            })
            .sum();
        sum / targets.len() as f64
    }

    /// Back-propagated gradient of the mean squared error, plus that error.
    pub fn gradient(&self, inputs: &[f64], targets: &[f64]) -> (f64, MlpGrad) {
        let mut grad = self.zero_grad();
        let loss = self.gradient_into(inputs, targets, &mut grad, &mut Workspace::default());
        (loss, grad)
    }

    pub fn zero_grad(&self) -> MlpGrad {
        MlpGrad {
            layers: self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    /// Overwrites `grad` (shaped like `self`) and returns the loss.
    pub fn gradient_into(&self, inputs: &[f64], targets: &[f64], grad: &mut MlpGrad, ws: &mut Workspace) -> f64 {
        let width = self.input_width();
        let n = targets.len() as f64;
        for g in &mut grad.layers {
            g.weights.fill(0.0);
            g.biases.fill(0.0);
        }
        // activations[k] is the input of layer k; the last entry is the output
        let activations = &mut ws.activations;
        activations.resize_with(self.layers.len() + 1, Vec::new);
        activations[0].resize(width, 0.0);
        for (a, l) in activations[1..].iter_mut().zip(&self.layers) {
            a.resize(l.outputs, 0.0);
        }
        let delta = &mut ws.a;
        let next_delta = &mut ws.b;
        let mut loss = 0.0;

        for (x, &t) in inputs.chunks_exact(width).zip(targets) {
            activations[0].copy_from_slice(x);
            for (k, layer) in self.layers.iter().enumerate() {
                let (head, tail) = activations.split_at_mut(k + 1);
                layer.forward_into(&head[k], &mut tail[0]);
            }
            let y = activations[self.layers.len()][0];
            let err = y - t;
            loss += err * err;

            // dL/dz at the output: 2(y - t)/n * tanh'(z)
            delta.clear();
            delta.push(2.0 * err / n * (1.0 - y * y));
            for k in (0..self.layers.len()).rev() {
                let layer = &self.layers[k];
                let g = &mut grad.layers[k];
                let input = &activations[k];
                for (o, d) in delta.iter().enumerate() {
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, v) in row.iter_mut().zip(input) {
                        *gw += d * v;
                    }
                }
                if k == 0 {
                    break;
                }
                next_delta.clear();
                next_delta.resize(layer.inputs, 0.0);
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (nd, w) in next_delta.iter_mut().zip(row) {
                        *nd += d * w;
                    }
                }
                for (nd, a) in next_delta.iter_mut().zip(input) {
                    *nd *= 1.0 - a * a;
                }
                std::mem::swap(delta, next_delta);
            }
        }
        loss / n
    }

    /// Copies `other`'s parameters in place; shapes must agree.
    pub fn copy_from(&mut self, other: &Mlp) {
        assert_eq!(self.layers.len(), other.layers.len(), "layer count differs");
        for (l, o) in self.layers.iter_mut().zip(&other.layers) {
            l.weights.copy_from_slice(&o.weights);
            l.biases.copy_from_slice(&o.biases);
        }
    }

    /// `self -= scale * grad`.
    pub fn apply(&mut self, grad: &MlpGrad, scale: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                *w -= scale * gw;
            }
            for (b, gb) in l.biases.iter_mut().zip(&g.biases) {
                *b -= scale * gb;
            }
        }
    }

    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().expect("parameter vector too short");
            }
        }
        assert!(it.next().is_none(), "parameter vector too long");
    }
}
