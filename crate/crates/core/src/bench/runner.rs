//! Executes a plan and writes the report bundle.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{BenchConfig, ModelRef, RunMode};
use super::env::Environment;
use super::timing::{render_plot_data, render_timing_table, time_run, write_timing_csv, RunStatus, TimingRecord, TimingTable};
use super::BenchError;
use crate::evaluation::{aggregate_models, verify_signals, DecimalSeparator, QualityReport, SignalOutcome};
use crate::lstm::{build_model, predict_signals, train, LstmError};
use crate::paired_ann::{run_custom_ann, AnnError};
use crate::signal::{write_signal_log, ForecastSignal};
use crate::tickdata::PriceSeries;

pub const TIMING_FILE: &str = "timing.csv";
pub const QUALITY_FILE: &str = "quality.csv";
pub const FIGURE1_FILE: &str = "figure1.csv";
pub const FIGURE2_FILE: &str = "figure2.csv";
pub const REPORT_FILE: &str = "report.md";

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Ann(#[from] AnnError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
}

impl ModelError {
    /// True when the input, not the model, is at fault.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            ModelError::Ann(AnnError::SeriesTooShort { .. }) | ModelError::Lstm(LstmError::InsufficientData { .. })
        )
    }
}

/// Produces a model's signals on one series, training included for LSTMs.
pub fn run_model(model: &ModelRef, series: &PriceSeries, cfg: &BenchConfig) -> Result<Vec<ForecastSignal>, ModelError> {
    match model {
        ModelRef::CustomAnn => Ok(run_custom_ann(series, &cfg.ann_config(), &cfg.indicators)?),
        ModelRef::Lstm(spec) => {
            let mut m = build_model(spec, cfg.plan.seed)?;
            train(&mut m, series, &cfg.train_config())?;
            Ok(predict_signals(&m, series, &cfg.predict_config())?)
        }
    }
}

/// `sLSTM-15-1,15` -> `sLSTM-15-1_15`.
pub fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.') { c } else { '_' })
        .collect()
}

pub fn signal_file_name(model: &str, period: &str) -> String {
    format!("signals_{}_{}.csv", sanitize(model), sanitize(period))
}

fn timed(model: &ModelRef, series: &PriceSeries, cfg: &BenchConfig, env: &Environment) -> Result<(TimingRecord, Option<Vec<ForecastSignal>>), BenchError> {
    let (label, period, reps) = (model.label(), series.source_label.as_str(), cfg.plan.repetitions);
    match (model, cfg.plan.mode) {
        (ModelRef::Lstm(spec), RunMode::PredictOnly) => {
            let pretrained = build_model(spec, cfg.plan.seed).and_then(|mut m| {
                train(&mut m, series, &cfg.train_config())?;
                Ok(m)
            });
            match pretrained {
                Ok(m) => time_run(label, period, reps, env, || predict_signals(&m, series, &cfg.predict_config())),
                Err(e) => Ok((
                    TimingRecord {
                        model_label: label.to_string(),
                        period_label: period.to_string(),
                        wall_seconds: 0.0,
                        peak_memory_mib: 0.0,
                        environment: env.clone(),
                        status: RunStatus::Failed(e.to_string()),
                    },
                    None,
                )),
            }
        }
        _ => time_run(label, period, reps, env, || run_model(model, series, cfg)),
    }
}

/// Everything a bench run produced.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub environment: Environment,
    pub records: Vec<TimingRecord>,
    pub table: TimingTable,
    pub quality: QualityReport,
    pub outcomes: Vec<SignalOutcome>,
    pub files: Vec<PathBuf>,
}

impl BenchOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &TimingRecord> {
        self.records.iter().filter(|r| !r.is_ok())
    }
}

/// `# key: value` header lines shared by every report file.
pub fn comment_header(env: &Environment, cfg: &BenchConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# environment: {}", env.describe());
    let _ = writeln!(s, "# verification: {}", cfg.evaluation.verification.describe());
    let _ = writeln!(
        s,
        "# emission: threshold={}, robust_boundary={}",
        cfg.emission.threshold, cfg.emission.robust_boundary
    );
    let _ = writeln!(
        s,
        "# plan: mode={}, repetitions={}, seed={}",
        match cfg.plan.mode {
            RunMode::EndToEnd => "end_to_end",
            RunMode::PredictOnly => "predict_only",
        },
        cfg.plan.repetitions,
        cfg.plan.seed
    );
    s
}

fn write_file(dir: &Path, name: &str, contents: &[u8], files: &mut Vec<PathBuf>) -> Result<(), BenchError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

/// Loads every dataset, times every model on each, verifies the signals
/// and writes the bundle into `out_dir`.
///
/// A failing model yields a failed record; the plan continues.
pub fn run_bench(cfg: &BenchConfig, out_dir: &Path) -> Result<BenchOutcome, BenchError> {
    cfg.validate()?;
    let models = cfg.models()?;
    let env = Environment::capture();
    // all data is loaded before any clock starts
    let datasets: Vec<PriceSeries> = cfg.datasets.iter().map(|d| cfg.load_dataset(d)).collect::<Result<_, _>>()?;
    fs::create_dir_all(out_dir).map_err(|e| BenchError::Io(format!("{}: {e}", out_dir.display())))?;

    let mut files = Vec::new();
    let mut records = Vec::new();
    let mut outcomes = Vec::new();
    for model in &models {
        for series in &datasets {
            let (record, signals) = timed(model, series, cfg, &env)?;
            records.push(record);
            let Some(signals) = signals else { continue };
            let mut log = Vec::new();
            write_signal_log(&signals, &mut log).map_err(|e| BenchError::Io(e.to_string()))?;
            write_file(out_dir, &signal_file_name(model.label(), &series.source_label), &log, &mut files)?;
            let verified = verify_signals(&signals, series, &cfg.evaluation.verification)
                .map_err(|e| BenchError::Data(e.to_string()))?;
            outcomes.extend(verified.into_iter().map(|mut o| {
                o.period = series.source_label.clone();
                o
            }));
        }
    }

    let labels: Vec<&str> = models.iter().map(ModelRef::label).collect();
    let quality = aggregate_models(&outcomes, &labels);
    let table = render_timing_table(&records)?;
    let plots = render_plot_data(&quality, &table)?;
    let header = comment_header(&env, cfg);

    let mut timing_csv = header.clone().into_bytes();
    write_timing_csv(&records, &mut timing_csv)?;
    write_file(out_dir, TIMING_FILE, &timing_csv, &mut files)?;

    let mut quality_csv = header.clone().into_bytes();
    quality.write_csv(&mut quality_csv).map_err(|e| BenchError::Io(e.to_string()))?;
    write_file(out_dir, QUALITY_FILE, &quality_csv, &mut files)?;

    write_file(out_dir, FIGURE1_FILE, format!("{header}{}", plots.figure1).as_bytes(), &mut files)?;
    write_file(out_dir, FIGURE2_FILE, format!("{header}{}", plots.figure2).as_bytes(), &mut files)?;

    let failures: Vec<String> = records
        .iter()
        .filter_map(|r| match &r.status {
            RunStatus::Failed(why) => Some(format!("{} / {}: {why}", r.model_label, r.period_label)),
            RunStatus::Ok => None,
        })
        .collect();
    let report = render_report(&header, &quality, &table, &failures, cfg.evaluation.decimal_separator);
    write_file(out_dir, REPORT_FILE, report.as_bytes(), &mut files)?;

    Ok(BenchOutcome {
        environment: env,
        records,
        table,
        quality,
        outcomes,
        files,
    })
}

/// Markdown report: settings, quality table, time table, failures.
pub fn render_report(header: &str, quality: &QualityReport, table: &TimingTable, failures: &[String], separator: DecimalSeparator) -> String {
    let mut md = String::from("# Benchmark report\n\n## Settings\n\n");
    for line in header.lines() {
        let _ = writeln!(md, "- {}", line.trim_start_matches('#').trim());
    }
    md.push_str("\n## Forecasting quality\n\n");
    md.push_str("STA counts all signals, STS only robust ones (|intensity| >= 1).\n\n");
    md.push_str(&quality.render_markdown(separator));
    md.push_str("\n## Time efficiency (seconds)\n\n");
    md.push_str(&table.render_markdown());
    if !failures.is_empty() {
        md.push_str("\n## Failed runs\n\n");
        for f in failures {
            let _ = writeln!(md, "- {f}");
        }
    }
    md
}
