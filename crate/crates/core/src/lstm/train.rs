//! Supervised fitting on next-tick changes and signal production.
//!
//! Inputs and targets are one-step mid changes in pips. A sample at series
//! index `t` reads the `lookback` changes ending at `t` and targets the
//! change from `t` to `t + 1`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::LstmModel;
use super::LstmError;
use crate::signal::{emit_signals, EmissionConfig, ForecastSignal, MAX_INTENSITY};
use crate::tickdata::PriceSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Global gradient-norm ceiling.
    pub grad_clip: f64,
    /// Leading share of the series used for fitting.
    pub train_fraction: f64,
    pub seed: u64,
    pub pip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch: 32,
            learning_rate: 1e-3,
            momentum: 0.9,
            grad_clip: 1.0,
            train_fraction: 0.7,
            seed: 0,
            pip: 0.0001,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LstmError> {
        let bad = |what: &str| Err(LstmError::InvalidConfig(what.to_string()));
        if self.epochs == 0 || self.batch == 0 {
            return bad("epochs and batch must be >= 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.grad_clip > 0.0) || !(self.pip > 0.0) {
            return bad("grad_clip and pip must be positive");
        }
        Ok(())
    }

    /// First held-out index.
    pub fn split_index(&self, len: usize) -> usize {
        (len as f64 * self.train_fraction).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-sample squared error of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
    pub samples: usize,
    pub steps: usize,
}

/// `changes[j] = (mid[j + 1] - mid[j]) / pip`.
pub fn pip_changes(series: &PriceSeries, pip: f64) -> Vec<f64> {
    let mids = series.mids();
    mids.windows(2).map(|w| (w[1] - w[0]) / pip).collect()
}

fn window(changes: &[f64], t: usize, lookback: usize) -> &[f64] {
    &changes[t - lookback..t]
}

pub fn train(model: &mut LstmModel, series: &PriceSeries, tcfg: &TrainConfig) -> Result<TrainReport, LstmError> {
    tcfg.validate()?;
    let lookback = model.lookback();
    let split = tcfg.split_index(series.len());
    // needs t = lookback with target mid[lookback + 1] inside the training span
    let required = ((lookback + 2) as f64 / tcfg.train_fraction).ceil() as usize;
    if split < lookback + 2 {
        return Err(LstmError::InsufficientData {
            required,
            actual: series.len(),
        });
    }
    let changes = pip_changes(series, tcfg.pip);
    let mut order: Vec<usize> = (lookback..split - 1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut velocity = vec![0.0; model.params.len()];
    let mut grad = vec![0.0; model.params.len()];
    let mut epoch_losses = Vec::with_capacity(tcfg.epochs);
    let mut steps = 0;

    for epoch in 0..tcfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (step, batch) in order.chunks(tcfg.batch).enumerate() {
            grad.fill(0.0);
            let scale = 2.0 / batch.len() as f64;
            for &t in batch {
                let cache = model.forward(window(&changes, t, lookback))?;
                let err = cache.output - changes[t];
                let loss = err * err;
                if !loss.is_finite() {
                    return Err(LstmError::Divergence { epoch, step, loss });
                }
                loss_sum += loss;
                model.backward(&cache, scale * err, &mut grad);
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(LstmError::Divergence { epoch, step, loss: norm });
            }
            let clip = if norm > tcfg.grad_clip { tcfg.grad_clip / norm } else { 1.0 };
            for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = tcfg.momentum * *v - tcfg.learning_rate * clip * g;
                *p += *v;
            }
            steps += 1;
        }
        epoch_losses.push(loss_sum / order.len() as f64);
    }
    model.trained = true;
    Ok(TrainReport {
        epoch_losses,
        samples: order.len(),
        steps,
    })
}

/// Volatility normalizer turning a predicted change into an intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatilityScale {
    /// Mean absolute one-step change over the trailing `window` changes.
    Rolling { window: usize },
    /// Fixed scale in pips.
    Constant { pips: f64 },
}

impl Default for VolatilityScale {
    fn default() -> Self {
        VolatilityScale::Rolling { window: 900 }
    }
}

impl VolatilityScale {
    /// Scale at every series index; 0 where no change is available yet.
    fn series(&self, changes: &[f64], len: usize) -> Vec<f64> {
        match *self {
            VolatilityScale::Constant { pips } => vec![pips; len],
            VolatilityScale::Rolling { window } => {
                let mut out = Vec::with_capacity(len);
                let mut sum = 0.0;
                out.push(0.0);
                for t in 1..len {
                    sum += changes[t - 1].abs();
                    if t > window {
                        sum -= changes[t - 1 - window].abs();
                    }
                    out.push(sum / t.min(window) as f64);
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub scale: VolatilityScale,
    pub emission: EmissionConfig,
    pub train_fraction: f64,
    pub pip: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            scale: VolatilityScale::default(),
            emission: EmissionConfig::default(),
            train_fraction: 0.7,
            pip: 0.0001,
        }
    }
}

pub fn intensity(prediction: f64, scale: f64) -> f64 {
    if scale > 0.0 && prediction.is_finite() {
        (MAX_INTENSITY * prediction / scale).clamp(-MAX_INTENSITY, MAX_INTENSITY)
    } else {
        0.0
    }
}

/// Raw predictions for every held-out index `t`, paired with `t`.
pub fn predict_span(model: &LstmModel, series: &PriceSeries, pcfg: &PredictConfig) -> Result<Vec<(usize, f64)>, LstmError> {
    if !model.trained {
        return Err(LstmError::Untrained(model.spec.name.to_string()));
    }
    let lookback = model.lookback();
    let n = series.len();
    let start = ((n as f64 * pcfg.train_fraction).floor() as usize).max(lookback);
    if start >= n {
        return Err(LstmError::InsufficientData {
            required: lookback + 1,
            actual: n,
        });
    }
    let changes = pip_changes(series, pcfg.pip);
    (start..n)
        .map(|t| Ok((t, model.predict(window(&changes, t, lookback))?)))
        .collect()
}

/// Emits signals over the held-out span through the shared emission gate.
pub fn predict_signals(model: &LstmModel, series: &PriceSeries, pcfg: &PredictConfig) -> Result<Vec<ForecastSignal>, LstmError> {
    let predictions = predict_span(model, series, pcfg)?;
    let scales = pcfg.scale.series(&pip_changes(series, pcfg.pip), series.len());
    Ok(signals_from_predictions(&predictions, &scales, series, pcfg.emission, model.spec.name))
}

pub fn signals_from_predictions(
    predictions: &[(usize, f64)],
    scales: &[f64],
    series: &PriceSeries,
    emission: EmissionConfig,
    label: &str,
) -> Vec<ForecastSignal> {
    emit_signals(
        predictions
            .iter()
            .map(|&(t, y)| (t, series.timestamp_ms(t), intensity(y, scales[t]))),
        emission,
        label,
    )
}
