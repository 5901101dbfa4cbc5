//! Dense, ReLU and same-padded 1-D convolution, forward and backward.

/// `y = W x + b`, `W` row-major `[outputs][inputs]`.
pub fn dense_forward(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let inputs = x.len();
    w.chunks_exact(inputs)
        .zip(b)
        .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

/// Accumulates `dW`, `db` and returns `dx`.
pub fn dense_backward(w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let inputs = x.len();
    let mut dx = vec![0.0; inputs];
    for (o, &d) in dy.iter().enumerate() {
        db[o] += d;
        let row = o * inputs..(o + 1) * inputs;
        for ((gw, wi), (xi, dxi)) in dw[row.clone()].iter_mut().zip(&w[row]).zip(x.iter().zip(dx.iter_mut())) {
            *gw += d * xi;
            *dxi += d * wi;
        }
    }
    dx
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Masks `dy` by the ReLU derivative at the pre-activation `z`.
pub fn relu_backward(z: &[f64], dy: &[f64]) -> Vec<f64> {
    z.iter().zip(dy).map(|(&zi, &d)| if zi > 0.0 { d } else { 0.0 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv1dShape {
    pub in_channels: usize,
    pub out_channels: usize,
    /// Odd; the sequence is zero-padded by `kernel / 2` on both sides.
    pub kernel: usize,
}

impl Conv1dShape {
    pub fn weight_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel
    }

    fn w_index(&self, out: usize, input: usize, k: usize) -> usize {
        (out * self.in_channels + input) * self.kernel + k
    }
}

/// Pre-activation output `[steps][out_channels]` for input `[steps][in_channels]`.
pub fn conv1d_forward(shape: Conv1dShape, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let steps = x.len() / shape.in_channels;
    let pad = shape.kernel / 2;
    let mut y = vec![0.0; steps * shape.out_channels];
    for t in 0..steps {
        for o in 0..shape.out_channels {
            let mut z = b[o];
            for k in 0..shape.kernel {
                let Some(src) = (t + k).checked_sub(pad).filter(|&s| s < steps) else {
                    continue;
                };
                for c in 0..shape.in_channels {
                    z += w[shape.w_index(o, c, k)] * x[src * shape.in_channels + c];
                }
            }
            y[t * shape.out_channels + o] = z;
        }
    }
    y
}

/// Accumulates `dW`, `db` and returns `dx` for a pre-activation gradient `dy`.
pub fn conv1d_backward(shape: Conv1dShape, w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let steps = x.len() / shape.in_channels;
    let pad = shape.kernel / 2;
    let mut dx = vec![0.0; x.len()];
    for t in 0..steps {
        for o in 0..shape.out_channels {
            let d = dy[t * shape.out_channels + o];
            db[o] += d;
            for k in 0..shape.kernel {
                let Some(src) = (t + k).checked_sub(pad).filter(|&s| s < steps) else {
                    continue;
                };
                for c in 0..shape.in_channels {
                    let wi = shape.w_index(o, c, k);
                    dw[wi] += d * x[src * shape.in_channels + c];
                    dx[src * shape.in_channels + c] += d * w[wi];
                }
            }
        }
    }
    dx
}
