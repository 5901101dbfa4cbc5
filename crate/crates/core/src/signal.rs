//! Forecast signals, the emission rule shared by every model, and the
//! signal-log CSV format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const MAX_INTENSITY: f64 = 3.0;
pub const SIGNAL_LOG_HEADER: [&str; 5] = ["index", "timestamp_ms", "direction", "intensity", "model_label"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    /// `None` for zero or NaN.
    pub fn of(intensity: f64) -> Option<Direction> {
        if intensity > 0.0 {
            Some(Direction::Up)
        } else if intensity < 0.0 {
            Some(Direction::Down)
        } else {
            None
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSignal {
    pub index: usize,
    pub timestamp_ms: i64,
    pub direction: Direction,
    pub intensity: f64,
    pub model_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmissionConfig {
    /// |intensity| below this never becomes a signal.
    pub threshold: f64,
    /// Crossing this from below re-emits in an unchanged direction.
    pub robust_boundary: f64,
}

impl Default for EmissionConfig {
    fn default() -> Self {
        Self {
            threshold: 0.25,
            robust_boundary: 1.0,
        }
    }
}

/// Decides which per-tick intensities become counted signals.
///
/// A tick emits when `|intensity| >= threshold` and either nothing has been
/// emitted yet, the direction differs from the last emitted signal, or
/// `|intensity|` reaches the robust boundary while the previous tick was
/// below it.
#[derive(Debug, Clone)]
pub struct EmissionGate {
    cfg: EmissionConfig,
    last_direction: Option<Direction>,
    prev_abs: f64,
}

impl EmissionGate {
    pub fn new(cfg: EmissionConfig) -> Self {
        Self {
            cfg,
            last_direction: None,
            prev_abs: 0.0,
        }
    }

    pub fn observe(&mut self, intensity: f64) -> Option<Direction> {
        let abs = intensity.abs();
        let prev_abs = std::mem::replace(&mut self.prev_abs, abs);
        let direction = Direction::of(intensity)?;
        if !(abs >= self.cfg.threshold) {
            return None;
        }
        let emit = match self.last_direction {
            None => true,
            Some(last) if last != direction => true,
            Some(_) => prev_abs < self.cfg.robust_boundary && abs >= self.cfg.robust_boundary,
        };
        if emit {
            self.last_direction = Some(direction);
            Some(direction)
        } else {
            None
        }
    }
}

/// Runs the emission gate over an intensity stream.
///
/// `intensities` yields `(series index, timestamp_ms, intensity)`.
pub fn emit_signals<I>(intensities: I, cfg: EmissionConfig, model_label: &str) -> Vec<ForecastSignal>
where
    I: IntoIterator<Item = (usize, i64, f64)>,
{
    let mut gate = EmissionGate::new(cfg);
    intensities
        .into_iter()
        .filter_map(|(index, timestamp_ms, intensity)| {
            gate.observe(intensity).map(|direction| ForecastSignal {
                index,
                timestamp_ms,
                direction,
                intensity,
                model_label: model_label.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum SignalLogError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("signal log: {0}")]
    Format(String),
}

#[derive(Serialize, Deserialize)]
struct SignalRow {
    index: usize,
    timestamp_ms: i64,
    direction: String,
    intensity: f64,
    model_label: String,
}

/// Writes `index,timestamp_ms,direction,intensity,model_label`.
pub fn write_signal_log<W: Write>(signals: &[ForecastSignal], out: W) -> Result<(), SignalLogError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SIGNAL_LOG_HEADER)?;
    for s in signals {
        w.serialize(SignalRow {
            index: s.index,
            timestamp_ms: s.timestamp_ms,
            direction: s.direction.as_str().to_string(),
            intensity: s.intensity,
            model_label: s.model_label.clone(),
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_signal_log<R: Read>(input: R) -> Result<Vec<ForecastSignal>, SignalLogError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != SIGNAL_LOG_HEADER {
        return Err(SignalLogError::Format(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for row in r.deserialize::<SignalRow>() {
        let row = row?;
        let direction: Direction = row.direction.parse().map_err(SignalLogError::Format)?;
        if Direction::of(row.intensity) != Some(direction) {
            return Err(SignalLogError::Format(format!(
                "signal at index {} has intensity {} inconsistent with direction {}",
                row.index,
                row.intensity,
                direction.as_str()
            )));
        }
        out.push(ForecastSignal {
            index: row.index,
            timestamp_ms: row.timestamp_ms,
            direction,
            intensity: row.intensity,
            model_label: row.model_label,
        });
    }
    Ok(out)
}
