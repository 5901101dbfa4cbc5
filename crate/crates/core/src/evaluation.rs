//! Signal verification and STA/STS success-rate reports.
//!
//! A signal succeeds when, within `horizon` ticks after emission, the mid
//! moves in the signal's direction by at least
//! `magnitude_per_intensity * |intensity|` pips. Signals without a full
//! horizon of future data are excluded from every count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::signal::ForecastSignal;
use crate::tickdata::PriceSeries;

pub const ROBUST_BOUNDARY: f64 = 1.0;
/// Period label of the all-periods row.
pub const OVERALL: &str = "Overall";
pub const NOT_APPLICABLE: &str = "N/A";
pub const QUALITY_CSV_HEADER: [&str; 8] = [
    "model",
    "period",
    "sta_successful",
    "sta_total",
    "sta_pct",
    "sts_successful",
    "sts_total",
    "sts_pct",
];

#[derive(Debug, thiserror::Error)]
pub enum EvaluationError {
    #[error("invalid verification config: {0}")]
    InvalidConfig(String),
    #[error("signal index {index} outside series of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("quality report: {0}")]
    Format(String),
}

pub type Result<T, E = EvaluationError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerificationConfig {
    pub horizon: usize,
    pub pip: f64,
    /// Pips of favourable move required per unit of |intensity|.
    pub magnitude_per_intensity: f64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            horizon: 900,
            pip: 0.0001,
            magnitude_per_intensity: 1.0,
        }
    }
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(EvaluationError::InvalidConfig("horizon must be >= 1".into()));
        }
        if !(self.pip > 0.0 && self.pip.is_finite()) {
            return Err(EvaluationError::InvalidConfig("pip must be positive".into()));
        }
        if !(self.magnitude_per_intensity >= 0.0 && self.magnitude_per_intensity.is_finite()) {
            return Err(EvaluationError::InvalidConfig("magnitude_per_intensity must be >= 0".into()));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "horizon={} ticks, pip={}, magnitude={} pip per unit intensity",
            self.horizon, self.pip, self.magnitude_per_intensity
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalClass {
    Robust,
    Weak,
}

/// Robust iff `|intensity| >= 1`, boundary inclusive.
pub fn classify_signal(s: &ForecastSignal) -> SignalClass {
    if s.intensity <= -ROBUST_BOUNDARY || s.intensity >= ROBUST_BOUNDARY {
        SignalClass::Robust
    } else {
        SignalClass::Weak
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Success,
    Failure,
    Excluded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalOutcome {
    pub signal: ForecastSignal,
    pub verdict: Verdict,
    /// Largest move in the signal's direction over the inspected future, in
    /// price units; negative when the price only moved against it.
    pub realized_move: f64,
    pub period: String,
}

/// `YYYY-MM` (UTC) of a millisecond timestamp.
pub fn month_label(timestamp_ms: i64) -> String {
    chrono::DateTime::from_timestamp_millis(timestamp_ms)
        .map(|t| t.format("%Y-%m").to_string())
        .unwrap_or_else(|| "invalid-time".to_string())
}

/// Verifies one signal against the mids that follow its emission.
///
/// `future` holds the mids after the emission tick, at most `horizon` of
/// them are inspected; fewer than `horizon` means excluded.
pub fn verify_signal(s: &ForecastSignal, emission_mid: f64, future: &[f64], cfg: &VerificationConfig) -> SignalOutcome {
    let future = &future[..future.len().min(cfg.horizon)];
    let sign = s.direction.sign();
    let required = cfg.magnitude_per_intensity * s.intensity.abs() * cfg.pip;
    // absorbs decimal-to-binary noise, e.g. 1.1002 - 1.1000 < 0.0002
    let tolerance = 1e-9 * cfg.pip;
    let realized_move = future
        .iter()
        .map(|m| sign * (m - emission_mid))
        .fold(f64::NEG_INFINITY, f64::max);
    let verdict = if future.len() < cfg.horizon {
        Verdict::Excluded
    } else if realized_move + tolerance >= required {
        Verdict::Success
    } else {
        Verdict::Failure
    };
    SignalOutcome {
        signal: s.clone(),
        verdict,
        realized_move: if future.is_empty() { 0.0 } else { realized_move },
        period: month_label(s.timestamp_ms),
    }
}

/// Verifies every signal against the series it was produced from.
pub fn verify_signals(signals: &[ForecastSignal], series: &PriceSeries, cfg: &VerificationConfig) -> Result<Vec<SignalOutcome>> {
    cfg.validate()?;
    let n = series.len();
    signals
        .iter()
        .map(|s| {
            if s.index >= n {
                return Err(EvaluationError::IndexOutOfRange { index: s.index, len: n });
            }
            let end = (s.index + 1 + cfg.horizon).min(n);
            let future: Vec<f64> = series.points[s.index + 1..end].iter().map(|p| p.mid).collect();
            Ok(verify_signal(s, series.mid(s.index), &future, cfg))
        })
        .collect()
}

/// Successful and total signal counts of one report cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub successful: u64,
    pub total: u64,
}

impl Tally {
    pub fn new(successful: u64, total: u64) -> Self {
        Self { successful, total }
    }

    /// Success percentage in hundredths of a percent, rounded half-up;
    /// `None` when there is nothing to count.
    pub fn percent_hundredths(&self) -> Option<u64> {
        (self.total > 0).then(|| (20_000 * self.successful + self.total) / (2 * self.total))
    }

    /// `82.05` or `82,05`, or `N/A`.
    pub fn percent(&self, separator: DecimalSeparator) -> String {
        match self.percent_hundredths() {
            Some(h) => format!("{}{}{:02}", h / 100, separator.as_char(), h % 100),
            None => NOT_APPLICABLE.to_string(),
        }
    }

    fn add(&mut self, success: bool) {
        self.total += 1;
        self.successful += u64::from(success);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecimalSeparator {
    #[default]
    Dot,
    Comma,
}

impl DecimalSeparator {
    pub fn as_char(self) -> char {
        match self {
            DecimalSeparator::Dot => '.',
            DecimalSeparator::Comma => ',',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityRow {
    pub model: String,
    pub period: String,
    /// All signals.
    pub sta: Tally,
    /// Robust signals only.
    pub sts: Tally,
}

/// One row per (model, period) plus an `Overall` row per model, sorted by
/// model, then period with `Overall` last.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QualityReport {
    pub rows: Vec<QualityRow>,
}

fn period_key(period: &str) -> (bool, &str) {
    (period == OVERALL, period)
}

impl QualityReport {
    pub fn from_rows(mut rows: Vec<QualityRow>) -> Self {
        rows.sort_by(|a, b| (&a.model, period_key(&a.period)).cmp(&(&b.model, period_key(&b.period))));
        Self { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, model: &str, period: &str) -> Option<&QualityRow> {
        self.rows.iter().find(|r| r.model == model && r.period == period)
    }

    pub fn models(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.model.as_str()).collect()
    }

    /// Month periods in order, without `Overall`.
    pub fn periods(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self
            .rows
            .iter()
            .map(|r| r.period.as_str())
            .filter(|p| *p != OVERALL)
            .collect();
        set.into_iter().collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(QUALITY_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.model.clone(),
                r.period.clone(),
                r.sta.successful.to_string(),
                r.sta.total.to_string(),
                r.sta.percent(DecimalSeparator::Dot),
                r.sts.successful.to_string(),
                r.sts.total.to_string(),
                r.sts.percent(DecimalSeparator::Dot),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads `write_csv` output; `#` lines are comments.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        if r.headers()?.iter().collect::<Vec<_>>() != QUALITY_CSV_HEADER {
            return Err(EvaluationError::Format(format!("unexpected header {:?}", r.headers()?)));
        }
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let count = |k: usize| {
                record[k]
                    .parse::<u64>()
                    .map_err(|e| EvaluationError::Format(format!("column {}: {e}", QUALITY_CSV_HEADER[k])))
            };
            let row = QualityRow {
                model: record[0].to_string(),
                period: record[1].to_string(),
                sta: Tally::new(count(2)?, count(3)?),
                sts: Tally::new(count(5)?, count(6)?),
            };
            check_row(&row)?;
            rows.push(row);
        }
        Ok(Self::from_rows(rows))
    }

    /// Markdown quality table: per model a
    /// block of successful / total / % rows, STA and STS columns per period.
    pub fn render_markdown(&self, separator: DecimalSeparator) -> String {
        let mut periods: Vec<&str> = self.periods();
        periods.push(OVERALL);
        let mut out = String::from("| Model |");
        for p in &periods {
            let _ = write!(out, " {p} STA | {p} STS |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(2 * periods.len()));
        out.push('\n');
        let empty = Tally::default();
        for model in self.models() {
            let cells: Vec<(Tally, Tally)> = periods
                .iter()
                .map(|p| self.get(model, p).map_or((empty, empty), |r| (r.sta, r.sts)))
                .collect();
            let _ = writeln!(out, "| **{}** |{}", escape_md(model), " |".repeat(2 * periods.len()));
            let line = |label: &str, f: &dyn Fn(&Tally) -> String| {
                let mut s = format!("| {label} |");
                for (sta, sts) in &cells {
                    let _ = write!(s, " {} | {} |", f(sta), f(sts));
                }
                s.push('\n');
                s
            };
            out.push_str(&line("Successful Forecasting Signals", &|t| t.successful.to_string()));
            out.push_str(&line("Total forecasting signals", &|t| t.total.to_string()));
            out.push_str(&line("% Success", &|t| match t.percent_hundredths() {
                Some(_) => format!("{}%", t.percent(separator)),
                None => NOT_APPLICABLE.to_string(),
            }));
        }
        out
    }
}

fn escape_md(s: &str) -> String {
    s.replace('|', "\\|")
}

fn check_row(row: &QualityRow) -> Result<()> {
    let ok = row.sta.successful <= row.sta.total
        && row.sts.successful <= row.sts.total
        && row.sts.total <= row.sta.total
        && row.sts.successful <= row.sta.successful;
    if ok {
        Ok(())
    } else {
        Err(EvaluationError::Format(format!(
            "inconsistent counts for {} / {}",
            row.model, row.period
        )))
    }
}

/// Counts non-excluded outcomes per (model, period) and per model overall.
pub fn aggregate(outcomes: &[SignalOutcome]) -> QualityReport {
    let mut cells: BTreeMap<(String, String), (Tally, Tally)> = BTreeMap::new();
    for o in outcomes {
        if o.verdict == Verdict::Excluded {
            continue;
        }
        let success = o.verdict == Verdict::Success;
        let robust = classify_signal(&o.signal) == SignalClass::Robust;
        for period in [o.period.as_str(), OVERALL] {
            let (sta, sts) = cells.entry((o.signal.model_label.clone(), period.to_string())).or_default();
            sta.add(success);
            if robust {
                sts.add(success);
            }
        }
    }
    QualityReport::from_rows(
        cells
            .into_iter()
            .map(|((model, period), (sta, sts))| QualityRow { model, period, sta, sts })
            .collect(),
    )
}

/// Report with explicit zero rows for models that produced no countable
/// signal, so they still appear (with N/A percentages).
pub fn aggregate_models(outcomes: &[SignalOutcome], models: &[&str]) -> QualityReport {
    let mut report = aggregate(outcomes);
    for model in models {
        if report.get(model, OVERALL).is_none() {
            report.rows.push(QualityRow {
                model: model.to_string(),
                period: OVERALL.to_string(),
                sta: Tally::default(),
                sts: Tally::default(),
            });
        }
    }
    QualityReport::from_rows(report.rows)
}
