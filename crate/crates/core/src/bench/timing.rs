//! Timed runs, the time-efficiency table and plot datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::sync::{Mutex, TryLockError};
use std::time::Instant;

use super::env::Environment;
use super::memory::PeakSampler;
use super::BenchError;
use crate::evaluation::{QualityReport, OVERALL};

/// Marker for a missing or failed table cell.
pub const FAILED: &str = "FAILED";
pub const TIMING_CSV_HEADER: [&str; 5] = ["model", "period", "wall_seconds", "peak_memory_mib", "status"];

/// Held for the whole of a timed run; a second run fails instead of waiting.
static RUN_LOCK: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub model_label: String,
    pub period_label: String,
    /// Median over repetitions; 0 for failed runs.
    pub wall_seconds: f64,
    pub peak_memory_mib: f64,
    pub environment: Environment,
    pub status: RunStatus,
}

impl TimingRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Runs `compute` `repetitions` times under the process-wide run lock.
///
/// Only `compute` is on the clock. The median wall time is recorded and
/// the last repetition's output returned. A failing repetition ends the
/// run with a failed record.
pub fn time_run<T, E, F>(
    model_label: &str,
    period_label: &str,
    repetitions: usize,
    environment: &Environment,
    mut compute: F,
) -> Result<(TimingRecord, Option<T>), BenchError>
where
    E: std::fmt::Display,
    F: FnMut() -> Result<T, E>,
{
    if repetitions == 0 {
        return Err(BenchError::InvalidPlan("repetitions must be >= 1".into()));
    }
    let _guard = match RUN_LOCK.try_lock() {
        Ok(guard) => guard,
        Err(TryLockError::Poisoned(p)) => p.into_inner(),
        Err(TryLockError::WouldBlock) => return Err(BenchError::LockContention),
    };
    let mut walls = Vec::with_capacity(repetitions);
    let mut peak: f64 = 0.0;
    let mut output = None;
    for _ in 0..repetitions {
        let sampler = PeakSampler::start();
        let start = Instant::now();
        let result = compute();
        let wall = start.elapsed().as_secs_f64();
        peak = peak.max(sampler.finish());
        match result {
            Ok(value) => {
                walls.push(wall);
                output = Some(value);
            }
            Err(e) => {
                let record = TimingRecord {
                    model_label: model_label.to_string(),
                    period_label: period_label.to_string(),
                    wall_seconds: 0.0,
                    peak_memory_mib: peak,
                    environment: environment.clone(),
                    status: RunStatus::Failed(e.to_string()),
                };
                return Ok((record, None));
            }
        }
    }
    let record = TimingRecord {
        model_label: model_label.to_string(),
        period_label: period_label.to_string(),
        wall_seconds: median(&mut walls),
        peak_memory_mib: peak,
        environment: environment.clone(),
        status: RunStatus::Ok,
    };
    Ok((record, output))
}

pub fn write_timing_csv<W: Write>(records: &[TimingRecord], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMING_CSV_HEADER)?;
    for r in records {
        let status = match &r.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Failed(why) => format!("failed: {why}"),
        };
        w.write_record([
            r.model_label.clone(),
            r.period_label.clone(),
            format!("{:.6}", r.wall_seconds),
            format!("{:.1}", r.peak_memory_mib),
            status,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads `write_timing_csv` output; the environment comes from the caller.
pub fn read_timing_csv<R: Read>(input: R, environment: &Environment) -> Result<Vec<TimingRecord>, BenchError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    if r.headers()?.iter().collect::<Vec<_>>() != TIMING_CSV_HEADER {
        return Err(BenchError::Format(format!("unexpected timing header {:?}", r.headers()?)));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let number = |k: usize| {
            record[k]
                .parse::<f64>()
                .map_err(|e| BenchError::Format(format!("column {}: {e}", TIMING_CSV_HEADER[k])))
        };
        let status = match &record[4] {
            "ok" => RunStatus::Ok,
            other => RunStatus::Failed(other.strip_prefix("failed: ").unwrap_or(other).to_string()),
        };
        out.push(TimingRecord {
            model_label: record[0].to_string(),
            period_label: record[1].to_string(),
            wall_seconds: number(2)?,
            peak_memory_mib: number(3)?,
            environment: environment.clone(),
            status,
        });
    }
    Ok(out)
}

/// Whole milliseconds, so the rendered Overall is exactly the rendered sum.
fn to_millis(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

/// `322` for whole seconds, `0.251` otherwise.
pub fn format_millis(ms: u64) -> String {
    if ms.is_multiple_of(1000) {
        (ms / 1000).to_string()
    } else {
        format!("{}.{:03}", ms / 1000, ms % 1000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingRow {
    pub model: String,
    /// Per period, `None` for missing or failed runs.
    pub cells_ms: Vec<Option<u64>>,
    /// Sum of the cells; `None` if any cell is missing.
    pub overall_ms: Option<u64>,
}

/// Model x period grid of median wall times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingTable {
    pub periods: Vec<String>,
    pub rows: Vec<TimingRow>,
}

pub fn render_timing_table(records: &[TimingRecord]) -> Result<TimingTable, BenchError> {
    let mut grid: BTreeMap<&str, BTreeMap<&str, Option<u64>>> = BTreeMap::new();
    let mut periods = BTreeSet::new();
    for r in records {
        periods.insert(r.period_label.as_str());
        let cell = r.is_ok().then(|| to_millis(r.wall_seconds));
        if grid
            .entry(&r.model_label)
            .or_default()
            .insert(&r.period_label, cell)
            .is_some()
        {
            return Err(BenchError::DuplicateRecord {
                model: r.model_label.clone(),
                period: r.period_label.clone(),
            });
        }
    }
    let rows = grid
        .into_iter()
        .map(|(model, cells)| {
            let cells_ms: Vec<Option<u64>> = periods.iter().map(|p| cells.get(p).copied().flatten()).collect();
            let overall_ms = cells_ms.iter().copied().sum();
            TimingRow {
                model: model.to_string(),
                cells_ms,
                overall_ms,
            }
        })
        .collect();
    Ok(TimingTable {
        periods: periods.into_iter().map(str::to_string).collect(),
        rows,
    })
}

fn cell(ms: Option<u64>) -> String {
    ms.map_or_else(|| FAILED.to_string(), format_millis)
}

impl TimingTable {
    pub fn row(&self, model: &str) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["model".to_string()];
        header.extend(self.periods.iter().cloned());
        header.push(OVERALL.to_string());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.model.clone()];
            record.extend(row.cells_ms.iter().map(|&c| cell(c)));
            record.push(cell(row.overall_ms));
            w.write_record(&record)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::from("| Name |");
        for p in &self.periods {
            let _ = write!(out, " {p} |");
        }
        let _ = writeln!(out, " {OVERALL} |");
        out.push_str("|---|");
        out.push_str(&"---:|".repeat(self.periods.len() + 1));
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "| {} |", row.model.replace('|', "\\|"));
            for &c in &row.cells_ms {
                let _ = write!(out, " {} |", cell(c));
            }
            let _ = writeln!(out, " {} |", cell(row.overall_ms));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotData {
    /// `model,period,seconds`
    pub figure1: String,
    /// `model,successful_signals_overall,total_seconds_overall`
    pub figure2: String,
}

/// Time-per-period and quality-versus-time datasets for external plotting.
pub fn render_plot_data(quality: &QualityReport, timing: &TimingTable) -> Result<PlotData, BenchError> {
    if quality.is_empty() {
        return Err(BenchError::InvalidPlan("quality report is empty".into()));
    }
    let quality_models: BTreeSet<&str> = quality.models();
    let timing_models: BTreeSet<&str> = timing.rows.iter().map(|r| r.model.as_str()).collect();
    if quality_models != timing_models {
        return Err(BenchError::ModelSetMismatch {
            quality: quality_models.into_iter().map(str::to_string).collect(),
            timing: timing_models.into_iter().map(str::to_string).collect(),
        });
    }
    let mut f1 = csv::Writer::from_writer(Vec::new());
    f1.write_record(["model", "period", "seconds"])?;
    let mut f2 = csv::Writer::from_writer(Vec::new());
    f2.write_record(["model", "successful_signals_overall", "total_seconds_overall"])?;
    for row in &timing.rows {
        for (period, &c) in timing.periods.iter().zip(&row.cells_ms) {
            f1.write_record([row.model.clone(), period.clone(), cell(c)])?;
        }
        let successful = quality
            .get(&row.model, OVERALL)
            .map_or(0, |q| q.sta.successful);
        f2.write_record([row.model.clone(), successful.to_string(), cell(row.overall_ms)])?;
    }
    let finish = |w: csv::Writer<Vec<u8>>| -> Result<String, BenchError> {
        let bytes = w.into_inner().map_err(|e| BenchError::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| BenchError::Format(e.to_string()))
    };
    Ok(PlotData {
        figure1: finish(f1)?,
        figure2: finish(f2)?,
    })
}
