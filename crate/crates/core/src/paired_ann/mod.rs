//! The paired-network forecaster.
//!
//! Each indicator family feeds one pair of identically shaped tanh networks.
//! The trainer runs back-propagation on samples whose outcome is already
//! known; every `transfer_every` ticks its weights are copied into the
//! predictor, which alone produces forecasts on current data. Predictor
//! outputs are averaged into one trend intensity in [-3, 3].

pub mod mlp;

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::indicators::{Family, IndicatorConfig, IndicatorError, IndicatorStream};
use crate::signal::{EmissionConfig, EmissionGate, ForecastSignal, MAX_INTENSITY};
use crate::tickdata::PriceSeries;
pub use mlp::{Layer, Mlp, MlpGrad, Workspace};

pub const MODEL_LABEL: &str = "custom-ann";

/// Halvings tried by the loss guard before a step is rejected outright.
const MAX_STEP_HALVINGS: u32 = 30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnnError {
    #[error("invalid paired-ANN configuration: {0}")]
    InvalidConfig(String),
    #[error("training history is empty")]
    EmptyHistory,
    #[error("non-finite value in training data")]
    NonFinite,
    #[error("input vector has {actual} components, pair needs index {needed}")]
    DimensionMismatch { needed: usize, actual: usize },
    #[error("series too short: {required} points required, {actual} available")]
    SeriesTooShort { required: usize, actual: usize },
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
}

pub type Result<T> = std::result::Result<T, AnnError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnPairConfig {
    pub pair_count: usize,
    pub hidden_layout: Vec<usize>,
    pub learning_rate: f64,
    /// Matured samples kept for training.
    pub train_window: usize,
    pub transfer_every: usize,
    pub emission_threshold: f64,
    pub robust_boundary: f64,
    /// Ticks between trainer updates.
    pub train_every: usize,
    /// Samples per update, taken at even strides across the training window
    /// (newest always included). `train_batch >= train_window` uses the
    /// whole window.
    pub train_batch: usize,
    /// Ticks until a sample's outcome is known.
    pub target_horizon: usize,
    /// Price move, in pips, that maps to a target of +/-1.
    pub target_scale_pips: f64,
    pub pip: f64,
    pub seed: u64,
}

impl Default for AnnPairConfig {
    fn default() -> Self {
        Self {
            pair_count: 5,
            hidden_layout: vec![8],
            learning_rate: 0.01,
            train_window: 900,
            transfer_every: 100,
            emission_threshold: 0.25,
            robust_boundary: 1.0,
            train_every: 1,
            train_batch: 8,
            target_horizon: 900,
            target_scale_pips: 10.0,
            pip: 0.0001,
            seed: 0,
        }
    }
}

impl AnnPairConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(AnnError::InvalidConfig(msg.to_string()));
        if self.pair_count == 0 {
            return fail("pair_count must be at least 1");
        }
        if self.hidden_layout.contains(&0) {
            return fail("hidden layers must be non-empty");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !(self.emission_threshold >= 0.0) {
            return fail("emission_threshold must be non-negative");
        }
        if self.train_window == 0 || self.transfer_every == 0 || self.train_every == 0 || self.train_batch == 0 {
            return fail("train_window, transfer_every, train_every and train_batch must be positive");
        }
        if self.target_horizon == 0 || !(self.target_scale_pips > 0.0) || !(self.pip > 0.0) {
            return fail("target horizon and scales must be positive");
        }
        Ok(())
    }

    pub fn emission(&self) -> EmissionConfig {
        EmissionConfig {
            threshold: self.emission_threshold,
            robust_boundary: self.robust_boundary,
        }
    }

    /// Shortest series `run_custom_ann` accepts.
    pub fn min_series_len(&self, icfg: &IndicatorConfig) -> usize {
        icfg.warm_up() + self.train_window + 1
    }
}

/// Trainer/predictor twin networks sharing one input slice.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnPair {
    pub trainer: Mlp,
    pub predictor: Mlp,
    /// Positions in the normalized indicator vector.
    pub input_slice: Vec<usize>,
    pub families: Vec<Family>,
}

/// Buffers one pair reuses across steps; shapes follow the first use.
#[derive(Debug, Clone, Default)]
pub struct StepScratch {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    grad: Option<MlpGrad>,
    trial: Option<Mlp>,
    workspace: Workspace,
}

/// One training example: full normalized indicator vector plus target.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnSample {
    pub inputs: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub loss_before: f64,
    pub loss_after: f64,
    /// Fraction of the learning rate actually applied (0 = rejected).
    pub step_scale: f64,
}

fn families_for_pair(pair: usize, pair_count: usize) -> Vec<Family> {
    let n = Family::ALL.len();
    if pair_count >= n {
        vec![Family::ALL[pair % n]]
    } else {
        Family::ALL
            .iter()
            .enumerate()
            .filter(|(k, _)| k % pair_count == pair)
            .map(|(_, f)| *f)
            .collect()
    }
}

/// Builds `pair_count` pairs with seeded uniform(+/-1/sqrt(fan_in)) weights.
pub fn init_pairs(cfg: &AnnPairConfig, icfg: &IndicatorConfig) -> Result<Vec<AnnPair>> {
    cfg.validate()?;
    icfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.pair_count)
        .map(|p| {
            let families = families_for_pair(p, cfg.pair_count);
            let input_slice: Vec<usize> = families.iter().flat_map(|&f| icfg.family_slice(f)).collect();
            if input_slice.is_empty() {
                return Err(AnnError::InvalidConfig(format!("pair {p} has no inputs")));
            }
            let mut sizes = vec![input_slice.len()];
            sizes.extend(&cfg.hidden_layout);
            sizes.push(1);
            let trainer = Mlp::uniform(&sizes, &mut rng);
            Ok(AnnPair {
                predictor: trainer.clone(),
                trainer,
                input_slice,
                families,
            })
        })
        .collect()
}

impl AnnPair {
    fn gather(&self, v: &[f64], out: &mut Vec<f64>) -> Result<()> {
        for &i in &self.input_slice {
            let x = *v.get(i).ok_or(AnnError::DimensionMismatch {
                needed: i,
                actual: v.len(),
            })?;
            out.push(x);
        }
        Ok(())
    }

    /// Gathers `(inputs, targets)` for the pair's slice of every sample.
    pub fn batch_inputs(&self, history: &[AnnSample]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        self.gather_batch(history, &mut inputs, &mut targets)?;
        Ok((inputs, targets))
    }

    fn gather_batch<'a, I>(&self, samples: I, inputs: &mut Vec<f64>, targets: &mut Vec<f64>) -> Result<()>
    where
        I: IntoIterator<Item = &'a AnnSample>,
    {
        inputs.clear();
        targets.clear();
        for s in samples {
            if !s.target.is_finite() || s.inputs.iter().any(|x| !x.is_finite()) {
                return Err(AnnError::NonFinite);
            }
            self.gather(&s.inputs, inputs)?;
            targets.push(s.target);
        }
        if targets.is_empty() {
            return Err(AnnError::EmptyHistory);
        }
        Ok(())
    }

    /// One full-batch gradient step on the trainer over `history`.
    ///
    /// A step that raises the batch loss is retried at half the rate, up to
    /// `MAX_STEP_HALVINGS` times, and dropped if it never helps, so the loss
    /// never increases. The predictor is not touched.
    pub fn train_step(&mut self, history: &[AnnSample], learning_rate: f64) -> Result<StepReport> {
        let mut scratch = StepScratch::default();
        self.train_step_with(history, learning_rate, &mut scratch)
    }

    /// `train_step` reusing caller-owned buffers.
    pub fn train_step_with<'a, I>(&mut self, samples: I, learning_rate: f64, scratch: &mut StepScratch) -> Result<StepReport>
    where
        I: IntoIterator<Item = &'a AnnSample>,
    {
        let StepScratch {
            inputs,
            targets,
            grad,
            trial,
            workspace,
        } = scratch;
        self.gather_batch(samples, inputs, targets)?;
        let grad = grad.get_or_insert_with(|| self.trainer.zero_grad());
        let loss_before = self.trainer.gradient_into(inputs, targets, grad, workspace);
        if grad.is_zero() {
            return Ok(StepReport {
                loss_before,
                loss_after: loss_before,
                step_scale: 0.0,
            });
        }
        let trial = trial.get_or_insert_with(|| self.trainer.clone());
        let mut scale = 1.0;
        for _ in 0..=MAX_STEP_HALVINGS {
            trial.copy_from(&self.trainer);
            trial.apply(grad, learning_rate * scale);
            let loss_after = trial.loss_with(inputs, targets, workspace);
            if loss_after <= loss_before {
                std::mem::swap(&mut self.trainer, trial);
                return Ok(StepReport {
                    loss_before,
                    loss_after,
                    step_scale: scale,
                });
            }
            scale *= 0.5;
        }
        Ok(StepReport {
            loss_before,
            loss_after: loss_before,
            step_scale: 0.0,
        })
    }

    /// Copies the trainer's weights into the predictor.
    pub fn transfer_weights(&mut self) {
        self.predictor.copy_from(&self.trainer);
    }

    /// Predictor output for a normalized indicator vector, in [-1, 1].
    pub fn predict(&self, v: &[f64]) -> Result<f64> {
        self.predict_with(v, &mut StepScratch::default())
    }

    pub fn predict_with(&self, v: &[f64], scratch: &mut StepScratch) -> Result<f64> {
        scratch.inputs.clear();
        self.gather(v, &mut scratch.inputs)?;
        Ok(self.predictor.forward_with(&scratch.inputs, &mut scratch.workspace))
    }

    /// Trainer output for the same input (the network being trained).
    pub fn trainer_output(&self, v: &[f64]) -> Result<f64> {
        let mut x = Vec::with_capacity(self.input_slice.len());
        self.gather(v, &mut x)?;
        Ok(self.trainer.forward(&x))
    }
}

/// Scales the mean pair output to an intensity in [-3, 3].
pub fn combine(outputs: &[f64]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(AnnError::EmptyHistory);
    }
    let mean = outputs.iter().sum::<f64>() / outputs.len() as f64;
    Ok((MAX_INTENSITY * mean).clamp(-MAX_INTENSITY, MAX_INTENSITY))
}

/// Positions of `batch` samples at even strides in a window of `n`, newest first.
fn strided(n: usize, batch: usize, out: &mut Vec<usize>) {
    out.clear();
    let b = batch.min(n);
    out.extend((0..b).map(|k| n - 1 - k * n / b));
}

/// Single adaptive pass over the series.
///
/// Every tick the indicator streams advance; the sample from `target_horizon`
/// ticks ago matures (its target is the clamped move since then) and joins
/// the training window; trainers take a step every `train_every` ticks and
/// hand their weights to the predictors every `transfer_every` ticks. Once
/// the predictors hold trained weights, each tick yields an intensity that
/// goes through the shared emission gate.
pub fn run_custom_ann(series: &PriceSeries, cfg: &AnnPairConfig, icfg: &IndicatorConfig) -> Result<Vec<ForecastSignal>> {
    let mut pairs = init_pairs(cfg, icfg)?;
    let required = cfg.min_series_len(icfg);
    if series.len() < required {
        return Err(AnnError::SeriesTooShort {
            required,
            actual: series.len(),
        });
    }
    let mut stream = IndicatorStream::new(icfg)?;
    let target_scale = cfg.target_scale_pips * cfg.pip;
    let mut pending: VecDeque<(usize, Vec<f64>, f64)> = VecDeque::new();
    let mut window: VecDeque<AnnSample> = VecDeque::with_capacity(cfg.train_window + 1);
    let mut gate = EmissionGate::new(cfg.emission());
    let mut trained = false;
    let mut predictor_ready = false;
    let mut signals = Vec::new();
    let mut picks: Vec<usize> = Vec::with_capacity(cfg.train_batch);
    let mut scratch = vec![StepScratch::default(); pairs.len()];
    let mut outputs = vec![0.0; pairs.len()];

    for (i, point) in series.points.iter().enumerate() {
        let vector = stream.push(point.mid).map(|v| v.normalized(icfg));
        if let Some(x) = &vector {
            pending.push_back((i, x.clone(), point.mid));
        }
        while pending.front().is_some_and(|(j, _, _)| j + cfg.target_horizon <= i) {
            let (_, inputs, mid_then) = pending.pop_front().expect("front checked");
            let target = ((point.mid - mid_then) / target_scale).clamp(-1.0, 1.0);
            window.push_back(AnnSample { inputs, target });
            if window.len() > cfg.train_window {
                window.pop_front();
            }
        }

        if !window.is_empty() && i % cfg.train_every == 0 {
            strided(window.len(), cfg.train_batch, &mut picks);
            for (pair, scratch) in pairs.iter_mut().zip(&mut scratch) {
                pair.train_step_with(picks.iter().map(|&k| &window[k]), cfg.learning_rate, scratch)?;
            }
            trained = true;
        }
        if trained && i % cfg.transfer_every == 0 {
            pairs.iter_mut().for_each(AnnPair::transfer_weights);
            predictor_ready = true;
        }

        if let (true, Some(x)) = (predictor_ready, &vector) {
            for ((o, pair), scratch) in outputs.iter_mut().zip(&pairs).zip(&mut scratch) {
                *o = pair.predict_with(x, scratch)?;
            }
            let intensity = combine(&outputs)?;
            if let Some(direction) = gate.observe(intensity) {
                signals.push(ForecastSignal {
                    index: i,
                    timestamp_ms: point.timestamp_ms,
                    direction,
                    intensity,
                    model_label: MODEL_LABEL.to_string(),
                });
            }
        }
    }
    Ok(signals)
}
