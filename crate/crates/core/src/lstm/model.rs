//! Sequential baseline: [conv + ReLU] -> LSTM (optionally bidirectional)
//! -> dense head (ReLU on hidden dense layers, linear output).
//!
//! All parameters live in one flat vector; layers address it through
//! offset blocks, so the optimizer and checkpoints work on a single slice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cell::{lstm_cell_backward, lstm_cell_forward_cached, CellCache, LstmGrads, LstmState, LstmWeights};
use super::layers::{conv1d_backward, conv1d_forward, dense_backward, dense_forward, relu, relu_backward, Conv1dShape};
use super::spec::{ModelSpec, CONV_CHANNELS, CONV_KERNEL};
use super::LstmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBlock {
    pub offset: usize,
    pub shape: Conv1dShape,
}

impl ConvBlock {
    pub fn len(&self) -> usize {
        self.shape.weight_count() + self.shape.out_channels
    }

    fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        p[self.offset..self.offset + self.len()].split_at(self.shape.weight_count())
    }

    fn split_mut<'a>(&self, p: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64]) {
        p[self.offset..self.offset + self.len()].split_at_mut(self.shape.weight_count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmBlock {
    pub offset: usize,
    pub input: usize,
    pub units: usize,
}

impl LstmBlock {
    pub fn len(&self) -> usize {
        LstmWeights::param_count(self.input, self.units)
    }

    pub fn weights<'a>(&self, p: &'a [f64]) -> LstmWeights<'a> {
        LstmWeights::from_block(&p[self.offset..self.offset + self.len()], self.input, self.units)
    }

    pub fn grads<'a>(&self, g: &'a mut [f64]) -> LstmGrads<'a> {
        LstmGrads::from_block(&mut g[self.offset..self.offset + self.len()], self.input, self.units)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseBlock {
    pub offset: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub relu: bool,
}

impl DenseBlock {
    pub fn len(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }

    fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        p[self.offset..self.offset + self.len()].split_at(self.outputs * self.inputs)
    }

    fn split_mut<'a>(&self, p: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64]) {
        p[self.offset..self.offset + self.len()].split_at_mut(self.outputs * self.inputs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub conv: Option<ConvBlock>,
    pub forward: LstmBlock,
    pub backward: Option<LstmBlock>,
    pub dense: Vec<DenseBlock>,
    pub param_count: usize,
}

impl Layout {
    pub fn for_spec(spec: &ModelSpec) -> Layout {
        Self::build(spec.convolutional, spec.lstm_units, spec.bidirectional, spec.dense_layout)
    }

    /// Arbitrary-size variant of a spec shape (gradient checks use small units).
    pub fn build(convolutional: bool, units: usize, bidirectional: bool, dense_layout: &[usize]) -> Layout {
        let mut offset = 0;
        let conv = convolutional.then(|| {
            let block = ConvBlock {
                offset,
                shape: Conv1dShape {
                    in_channels: 1,
                    out_channels: CONV_CHANNELS,
                    kernel: CONV_KERNEL,
                },
            };
            offset += block.len();
            block
        });
        let input = if convolutional { CONV_CHANNELS } else { 1 };
        let forward = LstmBlock { offset, input, units };
        offset += forward.len();
        let backward = bidirectional.then(|| {
            let block = LstmBlock { offset, input, units };
            offset += block.len();
            block
        });
        let mut width = if bidirectional { 2 * units } else { units };
        let mut dense = Vec::with_capacity(dense_layout.len());
        for (k, &outputs) in dense_layout.iter().enumerate() {
            let block = DenseBlock {
                offset,
                inputs: width,
                outputs,
                relu: k + 1 < dense_layout.len(),
            };
            offset += block.len();
            width = outputs;
            dense.push(block);
        }
        Layout {
            conv,
            forward,
            backward,
            dense,
            param_count: offset,
        }
    }

    /// `(offset, len, fan_in)` of every parameter block.
    fn blocks(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        if let Some(c) = self.conv {
            out.push((c.offset, c.len(), c.shape.in_channels * c.shape.kernel));
        }
        for l in std::iter::once(self.forward).chain(self.backward) {
            out.push((l.offset, l.len(), l.input + l.units));
        }
        for d in &self.dense {
            out.push((d.offset, d.len(), d.inputs));
        }
        out
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub conv_pre: Vec<f64>,
    /// LSTM input sequence, `[steps][width]`.
    pub sequence: Vec<f64>,
    pub forward_steps: Vec<CellCache>,
    /// In processing order (last time step first).
    pub backward_steps: Vec<CellCache>,
    pub dense_inputs: Vec<Vec<f64>>,
    pub dense_pre: Vec<Vec<f64>>,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub spec: ModelSpec,
    pub layout: Layout,
    pub params: Vec<f64>,
    pub trained: bool,
}

/// Seeded model for a table spec, uniform(+/-1/sqrt(fan_in)) initialization.
pub fn build_model(spec: &ModelSpec, seed: u64) -> Result<LstmModel, LstmError> {
    spec.validate()?;
    Ok(LstmModel::with_layout(spec.clone(), Layout::for_spec(spec), seed))
}

impl LstmModel {
    pub fn with_layout(spec: ModelSpec, layout: Layout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; layout.param_count];
        for (offset, len, fan_in) in layout.blocks() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut params[offset..offset + len] {
                *p = rng.random_range(-bound..=bound);
            }
        }
        Self {
            spec,
            layout,
            params,
            trained: false,
        }
    }

    pub fn lookback(&self) -> usize {
        self.spec.lookback
    }

    pub fn predict(&self, window: &[f64]) -> Result<f64, LstmError> {
        Ok(self.forward(window)?.output)
    }

    pub fn forward(&self, window: &[f64]) -> Result<ForwardCache, LstmError> {
        forward_with(&self.layout, &self.params, window)
    }

    /// Adds `d_output * d(output)/d(params)` into `grad`.
    pub fn backward(&self, cache: &ForwardCache, d_output: f64, grad: &mut [f64]) {
        backward_with(&self.layout, &self.params, cache, d_output, grad)
    }
}

fn run_lstm(block: &LstmBlock, params: &[f64], sequence: &[f64], steps: impl Iterator<Item = usize>) -> Result<Vec<CellCache>, LstmError> {
    let w = block.weights(params);
    let mut state = LstmState::zeros(block.units);
    let mut caches = Vec::new();
    for t in steps {
        let x = &sequence[t * block.input..(t + 1) * block.input];
        let cache = lstm_cell_forward_cached(x, &state, &w)?;
        state = LstmState {
            hidden: cache.hidden.clone(),
            cell: cache.cell.clone(),
        };
        caches.push(cache);
    }
    Ok(caches)
}

pub fn forward_with(layout: &Layout, params: &[f64], window: &[f64]) -> Result<ForwardCache, LstmError> {
    if window.is_empty() {
        return Err(LstmError::DimensionMismatch("empty input window".into()));
    }
    let steps = window.len();
    let (conv_pre, sequence) = match layout.conv {
        Some(conv) => {
            let (w, b) = conv.split(params);
            let pre = conv1d_forward(conv.shape, w, b, window);
            let act = relu(&pre);
            (pre, act)
        }
        None => (Vec::new(), window.to_vec()),
    };
    let forward_steps = run_lstm(&layout.forward, params, &sequence, 0..steps)?;
    let backward_steps = match &layout.backward {
        Some(block) => run_lstm(block, params, &sequence, (0..steps).rev())?,
        None => Vec::new(),
    };
    let mut features = forward_steps.last().map(|c| c.hidden.clone()).unwrap_or_default();
    if let Some(last) = backward_steps.last() {
        features.extend_from_slice(&last.hidden);
    }
    let mut dense_inputs = Vec::with_capacity(layout.dense.len());
    let mut dense_pre = Vec::with_capacity(layout.dense.len());
    for block in &layout.dense {
        let (w, b) = block.split(params);
        let pre = dense_forward(w, b, &features);
        dense_inputs.push(std::mem::take(&mut features));
        features = if block.relu { relu(&pre) } else { pre.clone() };
        dense_pre.push(pre);
    }
    Ok(ForwardCache {
        input: window.to_vec(),
        conv_pre,
        sequence,
        forward_steps,
        backward_steps,
        dense_inputs,
        dense_pre,
        output: features[0],
    })
}

fn bptt(block: &LstmBlock, params: &[f64], steps: &[CellCache], dh_last: &[f64], grad: &mut [f64], d_sequence: &mut [f64], positions: impl Iterator<Item = usize>) {
    let w = block.weights(params);
    let mut grads = block.grads(grad);
    let mut dh = dh_last.to_vec();
    let mut dc = vec![0.0; block.units];
    // caches and sequence positions walk backwards together
    for (cache, t) in steps.iter().rev().zip(positions) {
        let dx = &mut d_sequence[t * block.input..(t + 1) * block.input];
        let (dh_prev, dc_prev) = lstm_cell_backward(cache, &w, &dh, &dc, &mut grads, Some(dx));
        dh = dh_prev;
        dc = dc_prev;
    }
}

pub fn backward_with(layout: &Layout, params: &[f64], cache: &ForwardCache, d_output: f64, grad: &mut [f64]) {
    let mut d = vec![d_output];
    for (k, block) in layout.dense.iter().enumerate().rev() {
        if block.relu {
            d = relu_backward(&cache.dense_pre[k], &d);
        }
        let (w, _) = block.split(params);
        let (dw, db) = block.split_mut(grad);
        d = dense_backward(w, &cache.dense_inputs[k], &d, dw, db);
    }
    let steps = cache.forward_steps.len();
    let units = layout.forward.units;
    let mut d_sequence = vec![0.0; cache.sequence.len()];
    bptt(&layout.forward, params, &cache.forward_steps, &d[..units], grad, &mut d_sequence, (0..steps).rev());
    if let Some(block) = &layout.backward {
        bptt(block, params, &cache.backward_steps, &d[units..], grad, &mut d_sequence, 0..steps);
    }
    if let Some(conv) = layout.conv {
        let d_pre = relu_backward(&cache.conv_pre, &d_sequence);
        let (w, _) = conv.split(params);
        let (dw, db) = conv.split_mut(grad);
        conv1d_backward(conv.shape, w, &cache.input, &d_pre, dw, db);
    }
}

/// Hidden states of both directions in time order (bidirectional layouts).
pub fn bidirectional_states(layout: &Layout, params: &[f64], window: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), LstmError> {
    let cache = forward_with(layout, params, window)?;
    let forward = cache.forward_steps.iter().map(|c| c.hidden.clone()).collect();
    let mut backward: Vec<Vec<f64>> = cache.backward_steps.iter().map(|c| c.hidden.clone()).collect();
    backward.reverse();
    Ok((forward, backward))
}
