//! One LSTM step and its backward pass.
//!
//! Gate rows are stacked `[input, forget, candidate, output]`, each
//! `units` rows long; weights are row-major.

use super::LstmError;
use crate::activation::{sigmoid, tanh};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl LstmState {
    pub fn zeros(units: usize) -> Self {
        Self {
            hidden: vec![0.0; units],
            cell: vec![0.0; units],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LstmWeights<'a> {
    pub input: usize,
    pub units: usize,
    /// `[4*units][input]`
    pub w_x: &'a [f64],
    /// `[4*units][units]`
    pub w_h: &'a [f64],
    /// `[4*units]`
    pub bias: &'a [f64],
}

impl<'a> LstmWeights<'a> {
    pub fn param_count(input: usize, units: usize) -> usize {
        4 * units * (input + units + 1)
    }

    /// Splits a contiguous `[w_x | w_h | bias]` block.
    pub fn from_block(block: &'a [f64], input: usize, units: usize) -> Self {
        let (w_x, rest) = block.split_at(4 * units * input);
        let (w_h, bias) = rest.split_at(4 * units * units);
        debug_assert_eq!(bias.len(), 4 * units);
        Self {
            input,
            units,
            w_x,
            w_h,
            bias,
        }
    }
}

pub struct LstmGrads<'a> {
    pub w_x: &'a mut [f64],
    pub w_h: &'a mut [f64],
    pub bias: &'a mut [f64],
}

impl<'a> LstmGrads<'a> {
    pub fn from_block(block: &'a mut [f64], input: usize, units: usize) -> Self {
        let (w_x, rest) = block.split_at_mut(4 * units * input);
        let (w_h, bias) = rest.split_at_mut(4 * units * units);
        Self { w_x, w_h, bias }
    }
}

/// Values saved by the forward step for back-propagation.
#[derive(Debug, Clone)]
pub struct CellCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Gate activations, same stacking as the weight rows.
    pub gates: Vec<f64>,
    pub cell: Vec<f64>,
    pub tanh_cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Standard LSTM step; returns the new hidden vector and state.
pub fn lstm_cell_forward(x: &[f64], state: &LstmState, w: &LstmWeights<'_>) -> Result<(Vec<f64>, LstmState), LstmError> {
    let cache = lstm_cell_forward_cached(x, state, w)?;
    let state = LstmState {
        hidden: cache.hidden.clone(),
        cell: cache.cell,
    };
    Ok((cache.hidden, state))
}

pub fn lstm_cell_forward_cached(x: &[f64], state: &LstmState, w: &LstmWeights<'_>) -> Result<CellCache, LstmError> {
    let u = w.units;
    if x.len() != w.input || state.hidden.len() != u || state.cell.len() != u {
        return Err(LstmError::DimensionMismatch(format!(
            "cell expects input {} and state {}, got input {} and state {}/{}",
            w.input,
            u,
            x.len(),
            state.hidden.len(),
            state.cell.len()
        )));
    }
    let mut gates = Vec::with_capacity(4 * u);
    for r in 0..4 * u {
        let z = w.bias[r]
            + dot(&w.w_x[r * w.input..(r + 1) * w.input], x)
            + dot(&w.w_h[r * u..(r + 1) * u], &state.hidden);
        gates.push(if (2 * u..3 * u).contains(&r) { tanh(z) } else { sigmoid(z) });
    }
    let mut cell = Vec::with_capacity(u);
    let mut tanh_cell = Vec::with_capacity(u);
    let mut hidden = Vec::with_capacity(u);
    for j in 0..u {
        let (i, f, g, o) = (gates[j], gates[u + j], gates[2 * u + j], gates[3 * u + j]);
        let c = f * state.cell[j] + i * g;
        let tc = tanh(c);
        cell.push(c);
        tanh_cell.push(tc);
        hidden.push(o * tc);
    }
    Ok(CellCache {
        x: x.to_vec(),
        h_prev: state.hidden.clone(),
        c_prev: state.cell.clone(),
        gates,
        cell,
        tanh_cell,
        hidden,
    })
}

/// Back-propagates `dh`/`dc` through one step.
///
/// Accumulates parameter gradients into `grads`, adds the input gradient to
/// `dx` when given, and returns `(dh_prev, dc_prev)`.
pub fn lstm_cell_backward(
    cache: &CellCache,
    w: &LstmWeights<'_>,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmGrads<'_>,
    dx: Option<&mut [f64]>,
) -> (Vec<f64>, Vec<f64>) {
    let u = w.units;
    let mut dz = vec![0.0; 4 * u];
    let mut dc_prev = vec![0.0; u];
    for j in 0..u {
        let (i, f, g, o) = (
            cache.gates[j],
            cache.gates[u + j],
            cache.gates[2 * u + j],
            cache.gates[3 * u + j],
        );
        let tc = cache.tanh_cell[j];
        let dc_total = dc[j] + dh[j] * o * (1.0 - tc * tc);
        dz[j] = dc_total * g * i * (1.0 - i);
        dz[u + j] = dc_total * cache.c_prev[j] * f * (1.0 - f);
        dz[2 * u + j] = dc_total * i * (1.0 - g * g);
        dz[3 * u + j] = dh[j] * tc * o * (1.0 - o);
        dc_prev[j] = dc_total * f;
    }
    let mut dh_prev = vec![0.0; u];
    let mut dx = dx;
    for (r, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        grads.bias[r] += d;
        axpy(d, &cache.x, &mut grads.w_x[r * w.input..(r + 1) * w.input]);
        axpy(d, &cache.h_prev, &mut grads.w_h[r * u..(r + 1) * u]);
        axpy(d, &w.w_h[r * u..(r + 1) * u], &mut dh_prev);
        if let Some(dx) = dx.as_deref_mut() {
            axpy(d, &w.w_x[r * w.input..(r + 1) * w.input], dx);
        }
    }
    (dh_prev, dc_prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_everything_gives_zero_hidden() {
        let (input, units) = (3, 4);
        let params = vec![0.0; LstmWeights::param_count(input, units)];
        let w = LstmWeights::from_block(&params, input, units);
        let (h, state) = lstm_cell_forward(&[0.0; 3], &LstmState::zeros(units), &w).unwrap();
        assert_eq!(h, vec![0.0; units]);
        assert_eq!(state.cell, vec![0.0; units]);
    }

    #[test]
    fn saturated_forget_gate_carries_cell() {
        let (input, units) = (2, 3);
        let mut params = vec![0.0; LstmWeights::param_count(input, units)];
        let bias_start = params.len() - 4 * units;
        // forget bias 50, input-gate bias -50: the cell passes through unchanged
        for j in 0..units {
            params[bias_start + units + j] = 50.0;
            params[bias_start + j] = -50.0;
        }
        let w = LstmWeights::from_block(&params, input, units);
        let state = LstmState {
            hidden: vec![0.0; units],
            cell: vec![0.3, -0.7, 1.5],
        };
        let (_, next) = lstm_cell_forward(&[0.0, 0.0], &state, &w).unwrap();
        for (a, b) in next.cell.iter().zip(&state.cell) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let params = vec![0.0; LstmWeights::param_count(2, 2)];
        let w = LstmWeights::from_block(&params, 2, 2);
        assert!(lstm_cell_forward(&[0.0; 3], &LstmState::zeros(2), &w).is_err());
        assert!(lstm_cell_forward(&[0.0; 2], &LstmState::zeros(3), &w).is_err());
    }
}
