//! Streaming technical-indicator simulators.
//!
//! Bar indicators are adapted to tick data: each tick carries one price, so
//! high, low and close all collapse to the mid. Every indicator consumes its
//! input exactly once and keeps private rolling state, and each has a batch
//! helper that emits one value per index where the indicator is defined.
//!
//! Degenerate windows resolve to neutral values: RSI 50, CCI 0, Williams -50.

pub mod rolling;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::tickdata::{PricePoint, PriceSeries};
use rolling::{Extremum, MonotonicQueue, RollingWindow};

/// Lambert's constant in the CCI denominator.
pub const CCI_CONSTANT: f64 = 0.015;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndicatorError {
    #[error("series too short: {required} points required, {actual} available")]
    SeriesTooShort { required: usize, actual: usize },
    #[error("invalid indicator configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, IndicatorError>;

fn require_len(actual: usize, required: usize) -> Result<()> {
    if actual < required {
        Err(IndicatorError::SeriesTooShort { required, actual })
    } else {
        Ok(())
    }
}

/// Rolling arithmetic mean over the last `window` prices.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: RollingWindow,
}

impl MovingAverage {
    pub fn new(window: usize) -> Self {
        Self {
            window: RollingWindow::new(window),
        }
    }

    pub fn push(&mut self, price: f64) -> Option<f64> {
        self.window.push(price);
        self.window.is_full().then(|| self.window.mean())
    }
}

/// Relative strength index over simple (not Wilder-smoothed) means.
#[derive(Debug, Clone)]
pub struct Rsi {
    period: usize,
    prev: Option<f64>,
    gains: RollingWindow,
    losses: RollingWindow,
    gain_count: usize,
    loss_count: usize,
}

impl Rsi {
    pub fn new(period: usize) -> Self {
        Self {
            period,
            prev: None,
            gains: RollingWindow::new(period),
            losses: RollingWindow::new(period),
            gain_count: 0,
            loss_count: 0,
        }
    }

    pub fn push(&mut self, price: f64) -> Option<f64> {
        let prev = self.prev.replace(price)?;
        let delta = price - prev;
        let (gain, loss) = if delta > 0.0 { (delta, 0.0) } else { (0.0, -delta) };
        self.gain_count += usize::from(gain > 0.0);
        self.loss_count += usize::from(loss > 0.0);
        if let Some(old) = self.gains.push(gain) {
            self.gain_count -= usize::from(old > 0.0);
        }
        if let Some(old) = self.losses.push(loss) {
            self.loss_count -= usize::from(old > 0.0);
        }
        if !self.gains.is_full() {
            return None;
        }
        // the counts decide the exact zero cases; the sums may carry rounding residue
        let value = match (self.gain_count, self.loss_count) {
            (0, 0) => 50.0,
            (_, 0) => 100.0,
            (0, _) => 0.0,
            _ => {
                let mean_gain = self.gains.sum() / self.period as f64;
                let mean_loss = self.losses.sum() / self.period as f64;
                100.0 - 100.0 / (1.0 + mean_gain / mean_loss)
            }
        };
        Some(value.clamp(0.0, 100.0))
    }
}

/// Commodity channel index with typical price = mid.
#[derive(Debug, Clone)]
pub struct Cci {
    window: RollingWindow,
    max: MonotonicQueue,
    min: MonotonicQueue,
    index: usize,
}

impl Cci {
    pub fn new(period: usize) -> Self {
        Self {
            window: RollingWindow::new(period),
            max: MonotonicQueue::new(Extremum::Max),
            min: MonotonicQueue::new(Extremum::Min),
            index: 0,
        }
    }

    pub fn push(&mut self, price: f64) -> Option<f64> {
        let i = self.index;
        self.index += 1;
        self.window.push(price);
        self.max.push(i, price);
        self.min.push(i, price);
        let oldest = (i + 1).saturating_sub(self.window.len());
        self.max.expire(oldest);
        self.min.expire(oldest);
        if !self.window.is_full() {
            return None;
        }
        // constant window: mean deviation is zero
        if self.max.extremum() == self.min.extremum() {
            return Some(0.0);
        }
        // summed afresh: a rolling-sum residue divided by a tiny mean deviation is not small
        let sma = self.window.iter().sum::<f64>() / self.window.len() as f64;
        let md = self.window.iter().map(|p| (p - sma).abs()).sum::<f64>() / self.window.len() as f64;
        if md == 0.0 {
            return Some(0.0);
        }
        Some((price - sma) / (CCI_CONSTANT * md))
    }
}

/// Williams %R over rolling extrema of the mid.
#[derive(Debug, Clone)]
pub struct WilliamsR {
    period: usize,
    max: MonotonicQueue,
    min: MonotonicQueue,
    index: usize,
}

impl WilliamsR {
    pub fn new(period: usize) -> Self {
        Self {
            period,
            max: MonotonicQueue::new(Extremum::Max),
            min: MonotonicQueue::new(Extremum::Min),
            index: 0,
        }
    }

    pub fn push(&mut self, price: f64) -> Option<f64> {
        let i = self.index;
        self.index += 1;
        self.max.push(i, price);
        self.min.push(i, price);
        let oldest = (i + 1).saturating_sub(self.period);
        self.max.expire(oldest);
        self.min.expire(oldest);
        if i + 1 < self.period {
            return None;
        }
        let hh = self.max.extremum()?;
        let ll = self.min.extremum()?;
        if hh == ll {
            return Some(-50.0);
        }
        Some((-100.0 * (hh - price) / (hh - ll)).clamp(-100.0, 0.0))
    }
}

/// Differences between the shortest moving average and each longer one.
#[derive(Debug, Clone)]
pub struct PriceOscillator {
    averages: Vec<MovingAverage>,
}

impl PriceOscillator {
    pub fn new(windows: &[usize]) -> Self {
        Self {
            averages: windows.iter().map(|&w| MovingAverage::new(w)).collect(),
        }
    }

    pub fn push(&mut self, price: f64) -> Option<Vec<f64>> {
        let means: Vec<Option<f64>> = self.averages.iter_mut().map(|ma| ma.push(price)).collect();
        let means: Option<Vec<f64>> = means.into_iter().collect();
        let means = means?;
        Some(oscillator_from_means(&means))
    }
}

fn oscillator_from_means(means: &[f64]) -> Vec<f64> {
    match means.split_first() {
        Some((short, rest)) => rest.iter().map(|long| short - long).collect(),
        None => Vec::new(),
    }
}

fn collect_stream<I, F>(prices: I, step: F) -> Vec<f64>
where
    I: IntoIterator<Item = f64>,
    F: FnMut(f64) -> Option<f64>,
{
    prices.into_iter().filter_map(step).collect()
}

/// Moving average at every index `i >= window - 1`.
pub fn moving_average<I: IntoIterator<Item = f64>>(prices: I, window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(IndicatorError::InvalidConfig("window must be at least 1".into()));
    }
    let mut ma = MovingAverage::new(window);
    batch(prices, window, |p| ma.push(p))
}

// The batch helpers consume iterators, so the input length is only known
// once the stream is exhausted; `consumed` reports it.
fn too_short_after<T>(required: usize, consumed: usize) -> Result<T> {
    Err(IndicatorError::SeriesTooShort {
        required,
        actual: consumed,
    })
}

fn counted<'a, I>(prices: I, counter: &'a mut usize) -> impl Iterator<Item = f64> + 'a
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: 'a,
{
    prices.into_iter().inspect(move |_| *counter += 1)
}

fn batch<I, F>(prices: I, required: usize, step: F) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = f64>,
    F: FnMut(f64) -> Option<f64>,
{
    let mut consumed = 0usize;
    let out = collect_stream(counted(prices, &mut consumed), step);
    if consumed < required {
        return too_short_after(required, consumed);
    }
    Ok(out)
}

/// RSI at every index `i >= period`.
pub fn rsi<I: IntoIterator<Item = f64>>(prices: I, period: usize) -> Result<Vec<f64>> {
    check_period(period)?;
    let mut rsi = Rsi::new(period);
    batch(prices, period + 1, |p| rsi.push(p))
}

/// CCI at every index `i >= period - 1`.
pub fn cci<I: IntoIterator<Item = f64>>(prices: I, period: usize) -> Result<Vec<f64>> {
    check_period(period)?;
    let mut cci = Cci::new(period);
    batch(prices, period, |p| cci.push(p))
}

/// Williams %R at every index `i >= period - 1`.
pub fn williams_r<I: IntoIterator<Item = f64>>(prices: I, period: usize) -> Result<Vec<f64>> {
    check_period(period)?;
    let mut w = WilliamsR::new(period);
    batch(prices, period, |p| w.push(p))
}

/// Price oscillator components at every index where all averages exist.
pub fn price_oscillator<I: IntoIterator<Item = f64>>(prices: I, windows: &[usize]) -> Result<Vec<Vec<f64>>> {
    if windows.len() < 2 || windows.contains(&0) {
        return Err(IndicatorError::InvalidConfig(
            "price oscillator needs at least two positive windows".into(),
        ));
    }
    let required = *windows.iter().max().unwrap_or(&1);
    let mut osc = PriceOscillator::new(windows);
    let mut consumed = 0usize;
    let out: Vec<Vec<f64>> = counted(prices, &mut consumed).filter_map(|p| osc.push(p)).collect();
    if consumed < required {
        return too_short_after(required, consumed);
    }
    Ok(out)
}

fn check_period(period: usize) -> Result<()> {
    if period < 2 {
        Err(IndicatorError::InvalidConfig(format!("period must be at least 2, got {period}")))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    pub ma_windows: Vec<usize>,
    pub rsi_period: usize,
    pub cci_period: usize,
    pub williams_period: usize,
    /// Distance scale for moving-average and oscillator inputs, in pips.
    pub ma_scale_pips: f64,
    /// CCI values are clamped to +/- this before scaling to [-1, 1].
    pub cci_clamp: f64,
    pub pip: f64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            ma_windows: vec![300, 600, 900],
            rsi_period: 300,
            cci_period: 300,
            williams_period: 300,
            ma_scale_pips: 50.0,
            cci_clamp: 300.0,
            pip: 0.0001,
        }
    }
}

/// Indicator families, in input-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    MovingAverage,
    Rsi,
    Cci,
    Williams,
    Oscillator,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::MovingAverage,
        Family::Rsi,
        Family::Cci,
        Family::Williams,
        Family::Oscillator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::MovingAverage => "ma",
            Family::Rsi => "rsi",
            Family::Cci => "cci",
            Family::Williams => "williams",
            Family::Oscillator => "oscillator",
        }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ma_windows.is_empty() {
            return Err(IndicatorError::InvalidConfig("ma_windows is empty".into()));
        }
        let periods = self
            .ma_windows
            .iter()
            .chain([&self.rsi_period, &self.cci_period, &self.williams_period]);
        if let Some(p) = periods.into_iter().find(|&&p| p < 2) {
            return Err(IndicatorError::InvalidConfig(format!("period {p} is below 2")));
        }
        if !(self.ma_scale_pips > 0.0 && self.cci_clamp > 0.0 && self.pip > 0.0) {
            return Err(IndicatorError::InvalidConfig("scales must be positive".into()));
        }
        Ok(())
    }

    /// Number of points consumed before the first full vector exists.
    pub fn warm_up(&self) -> usize {
        let ma = self.ma_windows.iter().copied().max().unwrap_or(1);
        ma.max(self.rsi_period + 1)
            .max(self.cci_period)
            .max(self.williams_period)
    }

    pub fn input_width(&self) -> usize {
        let m = self.ma_windows.len();
        m + 3 + m.saturating_sub(1)
    }

    /// Positions of each family inside the normalized input vector.
    pub fn family_slice(&self, family: Family) -> Vec<usize> {
        let m = self.ma_windows.len();
        match family {
            Family::MovingAverage => (0..m).collect(),
            Family::Rsi => vec![m],
            Family::Cci => vec![m + 1],
            Family::Williams => vec![m + 2],
            Family::Oscillator => (m + 3..m + 3 + m.saturating_sub(1)).collect(),
        }
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["index".to_string()];
        cols.extend(self.ma_windows.iter().map(|w| format!("ma{w}")));
        cols.extend(["rsi", "cci", "williams"].map(String::from));
        cols.extend((1..self.ma_windows.len()).map(|k| format!("po{k}")));
        cols.join(",")
    }
}

/// All indicator outputs at one series position.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorVector {
    pub index: usize,
    pub mid: f64,
    pub ma: Vec<f64>,
    pub rsi: f64,
    pub cci: f64,
    pub williams: f64,
    pub price_osc: Vec<f64>,
}

impl IndicatorVector {
    /// Maps every component into [-1, 1] for the network input layer.
    pub fn normalized(&self, cfg: &IndicatorConfig) -> Vec<f64> {
        let scale = cfg.ma_scale_pips * cfg.pip;
        let mut out = Vec::with_capacity(cfg.input_width());
        out.extend(self.ma.iter().map(|ma| ((self.mid - ma) / scale).clamp(-1.0, 1.0)));
        out.push(normalize_rsi(self.rsi));
        out.push(self.cci.clamp(-cfg.cci_clamp, cfg.cci_clamp) / cfg.cci_clamp);
        out.push((self.williams + 50.0) / 50.0);
        out.extend(self.price_osc.iter().map(|po| (po / scale).clamp(-1.0, 1.0)));
        out
    }
}

pub fn normalize_rsi(rsi: f64) -> f64 {
    (rsi - 50.0) / 50.0
}

pub fn denormalize_rsi(value: f64) -> f64 {
    value * 50.0 + 50.0
}

/// Synchronized single-pass computation of every configured indicator.
#[derive(Debug, Clone)]
pub struct IndicatorStream {
    averages: Vec<MovingAverage>,
    rsi: Rsi,
    cci: Cci,
    williams: WilliamsR,
    index: usize,
    warm_up: usize,
}

impl IndicatorStream {
    pub fn new(cfg: &IndicatorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            averages: cfg.ma_windows.iter().map(|&w| MovingAverage::new(w)).collect(),
            rsi: Rsi::new(cfg.rsi_period),
            cci: Cci::new(cfg.cci_period),
            williams: WilliamsR::new(cfg.williams_period),
            index: 0,
            warm_up: cfg.warm_up(),
        })
    }

    pub fn warm_up(&self) -> usize {
        self.warm_up
    }

    pub fn push(&mut self, price: f64) -> Option<IndicatorVector> {
        let index = self.index;
        self.index += 1;
        let ma: Vec<Option<f64>> = self.averages.iter_mut().map(|m| m.push(price)).collect();
        let rsi = self.rsi.push(price);
        let cci = self.cci.push(price);
        let williams = self.williams.push(price);
        if index + 1 < self.warm_up {
            return None;
        }
        let ma: Vec<f64> = ma.into_iter().collect::<Option<_>>()?;
        let price_osc = oscillator_from_means(&ma);
        Some(IndicatorVector {
            index,
            mid: price,
            ma,
            rsi: rsi?,
            cci: cci?,
            williams: williams?,
            price_osc,
        })
    }
}

/// One vector per index from `warm_up - 1` onward.
pub fn indicator_vector_stream(series: &PriceSeries, cfg: &IndicatorConfig) -> Result<Vec<IndicatorVector>> {
    let mut stream = IndicatorStream::new(cfg)?;
    require_len(series.len(), stream.warm_up())?;
    Ok(series
        .points
        .iter()
        .filter_map(|p: &PricePoint| stream.push(p.mid))
        .collect())
}

/// Writes raw indicator values as CSV for offline inspection.
pub fn write_indicator_csv<W: Write>(vectors: &[IndicatorVector], cfg: &IndicatorConfig, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", cfg.csv_header())?;
    for v in vectors {
        let mut row = vec![v.index.to_string()];
        row.extend(v.ma.iter().map(f64::to_string));
        row.extend([v.rsi, v.cci, v.williams].iter().map(f64::to_string));
        row.extend(v.price_osc.iter().map(f64::to_string));
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}
