//! Tick ingestion: TrueFX-format parsing, flat-area removal, series
//! serialization and a seeded synthetic generator for tests and benches.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

const TRUEFX_TIME_FORMAT: &str = "%Y%m%d %H:%M:%S%.3f";
const SERIES_HEADER: &str = "timestamp_ms,mid";

/// 2021-10-01T00:00:00Z, the default origin for synthetic series.
pub const DEFAULT_SYNTH_START_MS: i64 = 1_633_046_400_000;

#[derive(Debug, thiserror::Error)]
pub enum TickError {
    #[error("expected 4 comma-separated fields, found {found}: {line:?}")]
    FieldCount { found: usize, line: String },
    #[error("unparsable timestamp {value:?}: {line:?}")]
    Timestamp { value: String, line: String },
    #[error("unparsable price {value:?}: {line:?}")]
    Price { value: String, line: String },
    #[error("non-positive price (bid {bid}, ask {ask}): {line:?}")]
    NonPositive { bid: f64, ask: f64, line: String },
    #[error("crossed quote, ask {ask} < bid {bid}: {line:?}")]
    CrossedQuote { bid: f64, ask: f64, line: String },
    #[error("line {number}: {source}")]
    AtLine {
        number: usize,
        #[source]
        source: Box<TickError>,
    },
    #[error("series is empty")]
    EmptySeries,
    #[error("invalid series file: {0}")]
    SeriesFormat(String),
    #[error("invalid synthesis parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TickError>;

/// One quote event.
#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub pair: String,
    pub timestamp: DateTime<Utc>,
    pub bid: f64,
    pub ask: f64,
}

impl Tick {
    pub fn mid(&self) -> f64 {
        (self.bid + self.ask) / 2.0
    }

    pub fn timestamp_ms(&self) -> i64 {
        self.timestamp.timestamp_millis()
    }

    pub fn price(&self, field: PriceField) -> f64 {
        match field {
            PriceField::Mid => self.mid(),
            PriceField::Bid => self.bid,
            PriceField::Ask => self.ask,
        }
    }
}

/// Which side of the quote becomes the series value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceField {
    #[default]
    Mid,
    Bid,
    Ask,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub timestamp_ms: i64,
    pub mid: f64,
}

/// Ordered sequence of prices with their timestamps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceSeries {
    pub points: Vec<PricePoint>,
    pub source_label: String,
}

impl PriceSeries {
    pub fn new(points: Vec<PricePoint>, source_label: impl Into<String>) -> Self {
        Self {
            points,
            source_label: source_label.into(),
        }
    }

    /// Builds a series from bare prices with one-second spacing.
    pub fn from_mids(mids: &[f64], source_label: impl Into<String>) -> Self {
        let points = mids
            .iter()
            .enumerate()
            .map(|(i, &mid)| PricePoint {
                timestamp_ms: DEFAULT_SYNTH_START_MS + 1000 * i as i64,
                mid,
            })
            .collect();
        Self::new(points, source_label)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mids(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mid).collect()
    }

    pub fn mid(&self, index: usize) -> f64 {
        self.points[index].mid
    }

    pub fn timestamp_ms(&self, index: usize) -> i64 {
        self.points[index].timestamp_ms
    }

    /// Serializes as CSV with header `timestamp_ms,mid`. Prices are written
    /// in shortest round-trip form, so reading back is bit-exact.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SERIES_HEADER}")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.timestamp_ms, p.mid)?;
        }
        out.flush()
    }

    pub fn read_csv<R: BufRead>(reader: R, source_label: impl Into<String>) -> Result<Self> {
        let mut lines = reader.lines();
        match lines.next() {
            Some(header) => {
                let header = header?;
                if header.trim() != SERIES_HEADER {
                    return Err(TickError::SeriesFormat(format!(
                        "expected header {SERIES_HEADER:?}, found {header:?}"
                    )));
                }
            }
            None => return Err(TickError::EmptySeries),
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (ts, mid) = line.split_once(',').ok_or_else(|| {
                TickError::SeriesFormat(format!("line {}: missing comma", i + 2))
            })?;
            let timestamp_ms = ts.trim().parse::<i64>().map_err(|_| {
                TickError::SeriesFormat(format!("line {}: bad timestamp {ts:?}", i + 2))
            })?;
            let mid = mid.trim().parse::<f64>().map_err(|_| {
                TickError::SeriesFormat(format!("line {}: bad price {mid:?}", i + 2))
            })?;
            points.push(PricePoint { timestamp_ms, mid });
        }
        if points.is_empty() {
            return Err(TickError::EmptySeries);
        }
        Ok(Self::new(points, source_label))
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let label = file_label(path);
        Self::read_csv(BufReader::new(File::open(path)?), label)
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        self.write_csv(std::io::BufWriter::new(File::create(path)?))
    }
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_price(value: &str, line: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|p| p.is_finite())
        .ok_or_else(|| TickError::Price {
            value: value.to_string(),
            line: line.to_string(),
        })
}

/// Parses one TrueFX record: `pair,yyyymmdd hh:mm:ss.fff,bid,ask`.
pub fn parse_tick_line(line: &str) -> Result<Tick> {
    let line = line.trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 4 {
        return Err(TickError::FieldCount {
            found: fields.len(),
            line: line.to_string(),
        });
    }
    let naive = NaiveDateTime::parse_from_str(fields[1].trim(), TRUEFX_TIME_FORMAT).map_err(|_| {
        TickError::Timestamp {
            value: fields[1].to_string(),
            line: line.to_string(),
        }
    })?;
    let bid = parse_price(fields[2], line)?;
    let ask = parse_price(fields[3], line)?;
    if bid <= 0.0 || ask <= 0.0 {
        return Err(TickError::NonPositive {
            bid,
            ask,
            line: line.to_string(),
        });
    }
    if ask < bid {
        return Err(TickError::CrossedQuote {
            bid,
            ask,
            line: line.to_string(),
        });
    }
    Ok(Tick {
        pair: fields[0].trim().to_string(),
        timestamp: Utc.from_utc_datetime(&naive),
        bid,
        ask,
    })
}

/// Loads the raw (not yet flat-filtered) series of one currency pair.
pub fn load_series<R: BufRead>(reader: R, pair_filter: &str, field: PriceField) -> Result<PriceSeries> {
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tick = parse_tick_line(&line).map_err(|e| TickError::AtLine {
            number: i + 1,
            source: Box::new(e),
        })?;
        if tick.pair != pair_filter {
            continue;
        }
        points.push(PricePoint {
            timestamp_ms: tick.timestamp_ms(),
            mid: tick.price(field),
        });
    }
    if points.is_empty() {
        return Err(TickError::EmptySeries);
    }
    Ok(PriceSeries::new(points, pair_filter))
}

pub fn load_series_file(path: impl AsRef<Path>, pair_filter: &str, field: PriceField) -> Result<PriceSeries> {
    let path = path.as_ref();
    let mut series = load_series(BufReader::new(File::open(path)?), pair_filter, field)?;
    series.source_label = file_label(path);
    Ok(series)
}

/// Collapses every run of equal consecutive prices to its first point.
pub fn remove_flat_areas(series: &PriceSeries) -> Result<PriceSeries> {
    if series.is_empty() {
        return Err(TickError::EmptySeries);
    }
    let mut points: Vec<PricePoint> = Vec::with_capacity(series.len());
    for p in &series.points {
        if points.last().is_some_and(|last| last.mid == p.mid) {
            continue;
        }
        points.push(*p);
    }
    Ok(PriceSeries::new(points, series.source_label.clone()))
}

/// Parameters of the seeded Gaussian random walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub seed: u64,
    pub length: usize,
    pub start_price: f64,
    /// Per-step standard deviation, price units.
    pub vol: f64,
    /// Per-step deterministic drift, price units.
    pub drift: f64,
    pub start_ms: i64,
    pub step_ms: i64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 0,
            length: 20_000,
            start_price: 1.15,
            vol: 0.00002,
            drift: 0.0,
            start_ms: DEFAULT_SYNTH_START_MS,
            step_ms: 1000,
        }
    }
}

impl SynthParams {
    pub fn generate(&self) -> Result<PriceSeries> {
        if self.length == 0 {
            return Err(TickError::InvalidParameter("length must be positive".into()));
        }
        if !(self.vol > 0.0 && self.vol.is_finite()) {
            return Err(TickError::InvalidParameter(format!("vol must be positive, got {}", self.vol)));
        }
        if !(self.start_price > 0.0) {
            return Err(TickError::InvalidParameter(format!(
                "start price must be positive, got {}",
                self.start_price
            )));
        }
        let normal = Normal::new(self.drift, self.vol)
            .map_err(|e| TickError::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut points = Vec::with_capacity(self.length);
        let mut price = self.start_price;
        for i in 0..self.length {
            if i > 0 {
                // zero steps are redrawn so the output stays flat-free
                loop {
                    let next = price + normal.sample(&mut rng);
                    if next != price && next > 0.0 {
                        price = next;
                        break;
                    }
                }
            }
            points.push(PricePoint {
                timestamp_ms: self.start_ms + self.step_ms * i as i64,
                mid: price,
            });
        }
        Ok(PriceSeries::new(points, format!("synthetic-{}", self.seed)))
    }
}

/// Deterministic random walk with default timestamps.
pub fn synthesize_series(seed: u64, length: usize, start: f64, vol: f64) -> Result<PriceSeries> {
    SynthParams {
        seed,
        length,
        start_price: start,
        vol,
        ..SynthParams::default()
    }
    .generate()
}
