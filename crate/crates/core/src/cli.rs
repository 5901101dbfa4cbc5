//! Command-line front end; `run` returns the process exit status.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bench::runner::{comment_header, render_report, sanitize, signal_file_name, QUALITY_FILE, REPORT_FILE, TIMING_FILE};
use crate::bench::timing::read_timing_csv;
use crate::bench::{render_timing_table, run_bench, run_model, BenchConfig, BenchError, Environment, ModelError, ModelRef};
use crate::evaluation::{aggregate, verify_signals, DecimalSeparator, QualityReport};
use crate::lstm::{build_model, predict_signals, read_checkpoint, train, write_checkpoint};
use crate::signal::{read_signal_log, write_signal_log};
use crate::tickdata::{load_series_file, remove_flat_areas, PriceField, PriceSeries, SynthParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_MODEL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Model(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Model(_) => EXIT_MODEL,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Model(e.to_string())
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InvalidPlan(_) | BenchError::Config(_) => CliError::Usage(e.to_string()),
            BenchError::LockContention => CliError::Model(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn data_err<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Md,
}

#[derive(Debug, Parser)]
#[command(name = "fxbench", version, about = "Forex forecaster benchmark: paired ANN versus LSTM baselines")]
struct Cli {
    /// TOML plan / model configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Rendering of tables printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse TrueFX ticks, remove flat areas and write a series CSV.
    Ingest {
        input: PathBuf,
        #[arg(long, default_value = "EUR/USD")]
        pair: String,
        /// mid, bid or ask.
        #[arg(long, default_value = "mid")]
        price: String,
        /// Keep runs of unchanged prices.
        #[arg(long)]
        keep_flat: bool,
    },
    /// Generate a seeded synthetic series.
    Synth {
        #[arg(long, default_value_t = 20_000)]
        length: usize,
        #[arg(long, default_value_t = 1.15)]
        start_price: f64,
        /// Per-tick standard deviation in price units.
        #[arg(long, default_value_t = 0.00002)]
        vol: f64,
        /// Per-tick drift in price units.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        drift: f64,
    },
    /// Train one LSTM baseline and save a checkpoint.
    Train {
        #[arg(long)]
        model: String,
        #[arg(long)]
        series: PathBuf,
    },
    /// Produce the signal log of one model.
    Run {
        #[arg(long)]
        model: String,
        #[arg(long)]
        series: PathBuf,
        /// Trained LSTM checkpoint; without one the model is trained first.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Verify signal logs against their series and aggregate STA/STS.
    Evaluate {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        signals: Vec<PathBuf>,
    },
    /// Run the full plan: timing, quality, plot data and report.
    Bench,
    /// Re-render the report from a bench output directory.
    Report {
        /// Directory holding timing.csv and quality.csv (defaults to --out).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), executes, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<BenchConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.plan.seed = seed;
    }
    Ok(cfg)
}

fn read_series(path: &Path) -> Result<PriceSeries, CliError> {
    PriceSeries::read_csv_file(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn print(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

fn quality_text(quality: &QualityReport, format: Format, separator: DecimalSeparator) -> Result<String, CliError> {
    match format {
        Format::Md => Ok(quality.render_markdown(separator)),
        Format::Csv => {
            let mut buf = Vec::new();
            quality.write_csv(&mut buf).map_err(data_err("quality"))?;
            Ok(String::from_utf8_lossy(&buf).into_owned())
        }
    }
}

fn series_label(path: &Path) -> String {
    path.file_stem().map_or_else(|| "series".to_string(), |s| s.to_string_lossy().into_owned())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Ingest {
            input,
            pair,
            price,
            keep_flat,
        } => {
            let field = match price.as_str() {
                "mid" => PriceField::Mid,
                "bid" => PriceField::Bid,
                "ask" => PriceField::Ask,
                other => return Err(CliError::Usage(format!("--price must be mid, bid or ask, not {other:?}"))),
            };
            let raw = load_series_file(input, pair, field).map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
            let series = if *keep_flat {
                raw.clone()
            } else {
                remove_flat_areas(&raw).map_err(data_err("preprocessing"))?
            };
            create_out(&cli.out)?;
            let path = cli.out.join(format!("{}.csv", sanitize(&series_label(input))));
            series.write_csv_file(&path).map_err(data_err(path.display()))?;
            print(
                out,
                &format!("{} ticks, {} after flat-area removal -> {}\n", raw.len(), series.len(), path.display()),
            )?;
        }
        Command::Synth {
            length,
            start_price,
            vol,
            drift,
        } => {
            let params = SynthParams {
                seed: cfg.plan.seed,
                length: *length,
                start_price: *start_price,
                vol: *vol,
                drift: *drift,
                ..SynthParams::default()
            };
            let series = params.generate().map_err(|e| CliError::Usage(e.to_string()))?;
            create_out(&cli.out)?;
            let path = cli.out.join(format!("synthetic-{}.csv", params.seed));
            series.write_csv_file(&path).map_err(data_err(path.display()))?;
            print(out, &format!("{} points -> {}\n", series.len(), path.display()))?;
        }
        Command::Train { model, series } => {
            let ModelRef::Lstm(spec) = ModelRef::parse(model)? else {
                return Err(CliError::Usage(format!(
                    "{model} trains during its run; use `run` instead"
                )));
            };
            let data = read_series(series)?;
            let mut m = build_model(&spec, cfg.plan.seed).map_err(|e| CliError::Model(e.to_string()))?;
            let report = train(&mut m, &data, &cfg.train_config()).map_err(|e| CliError::from(ModelError::from(e)))?;
            create_out(&cli.out)?;
            let path = cli.out.join(format!("{}.ckpt", sanitize(spec.name)));
            let mut buf = Vec::new();
            write_checkpoint(&m, &mut buf).map_err(|e| CliError::Model(e.to_string()))?;
            write_out(&path, &buf)?;
            let mut text = match cli.format {
                Format::Csv => "epoch,mean_squared_error\n".to_string(),
                Format::Md => "| epoch | mean squared error |\n|---:|---:|\n".to_string(),
            };
            for (k, loss) in report.epoch_losses.iter().enumerate() {
                text.push_str(&match cli.format {
                    Format::Csv => format!("{},{loss}\n", k + 1),
                    Format::Md => format!("| {} | {loss:.6} |\n", k + 1),
                });
            }
            print(out, &text)?;
            eprintln!("checkpoint -> {}", path.display());
        }
        Command::Run {
            model,
            series,
            checkpoint,
        } => {
            let model_ref = ModelRef::parse(model)?;
            let data = read_series(series)?;
            let signals = match (&model_ref, checkpoint) {
                (ModelRef::Lstm(spec), Some(path)) => {
                    let file = fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                    let m = read_checkpoint(std::io::BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                    if m.spec != *spec {
                        return Err(CliError::Usage(format!("checkpoint holds {}, not {}", m.spec.name, spec.name)));
                    }
                    predict_signals(&m, &data, &cfg.predict_config()).map_err(|e| CliError::from(ModelError::from(e)))?
                }
                (ModelRef::CustomAnn, Some(_)) => {
                    return Err(CliError::Usage("the custom ANN takes no checkpoint".into()));
                }
                (_, None) => run_model(&model_ref, &data, &cfg)?,
            };
            create_out(&cli.out)?;
            let path = cli.out.join(signal_file_name(model_ref.label(), &series_label(series)));
            let mut buf = Vec::new();
            write_signal_log(&signals, &mut buf).map_err(data_err("signal log"))?;
            write_out(&path, &buf)?;
            print(out, &format!("{} signals -> {}\n", signals.len(), path.display()))?;
        }
        Command::Evaluate { series, signals } => {
            let data = read_series(series)?;
            let verification = cfg.evaluation.verification;
            verification.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let mut outcomes = Vec::new();
            for path in signals {
                let file = fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                let log = read_signal_log(file).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
                outcomes.extend(verify_signals(&log, &data, &verification).map_err(data_err(path.display()))?);
            }
            let quality = aggregate(&outcomes);
            create_out(&cli.out)?;
            let header = format!("# verification: {}\n", verification.describe());
            let mut buf = header.into_bytes();
            quality.write_csv(&mut buf).map_err(data_err("quality"))?;
            write_out(&cli.out.join(QUALITY_FILE), &buf)?;
            if quality.is_empty() {
                print(out, "no countable signals: STA N/A, STS N/A\n")?;
            } else {
                print(out, &quality_text(&quality, cli.format, cfg.evaluation.decimal_separator)?)?;
            }
        }
        Command::Bench => {
            let outcome = run_bench(&cfg, &cli.out)?;
            let text = match cli.format {
                Format::Md => fs::read_to_string(cli.out.join(REPORT_FILE)).map_err(data_err(REPORT_FILE))?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    outcome.table.write_csv(&mut buf)?;
                    String::from_utf8_lossy(&buf).into_owned()
                }
            };
            print(out, &text)?;
            let failed: Vec<String> = outcome.failures().map(|r| format!("{} / {}", r.model_label, r.period_label)).collect();
            if !failed.is_empty() {
                eprintln!("failed runs: {}", failed.join(", "));
                return Ok(EXIT_MODEL);
            }
        }
        Command::Report { input } => {
            let dir = input.as_ref().unwrap_or(&cli.out);
            let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| CliError::Data(format!("{}: {e}", dir.join(name).display())));
            let timing_text = read(TIMING_FILE)?;
            let quality_text_raw = read(QUALITY_FILE)?;
            let env = Environment::capture();
            let records = read_timing_csv(timing_text.as_bytes(), &env)?;
            let table = render_timing_table(&records)?;
            let quality = QualityReport::read_csv(quality_text_raw.as_bytes()).map_err(data_err(QUALITY_FILE))?;
            // settings come from the saved files, not from this host
            let header: String = timing_text
                .lines()
                .take_while(|l| l.starts_with('#'))
                .map(|l| format!("{l}\n"))
                .collect();
            let header = if header.is_empty() { comment_header(&env, &cfg) } else { header };
            let failures: Vec<String> = records
                .iter()
                .filter(|r| !r.is_ok())
                .map(|r| format!("{} / {}", r.model_label, r.period_label))
                .collect();
            let text = match cli.format {
                Format::Md => {
                    let md = render_report(&header, &quality, &table, &failures, cfg.evaluation.decimal_separator);
                    write_out(&dir.join(REPORT_FILE), md.as_bytes())?;
                    md
                }
                Format::Csv => {
                    let mut buf = Vec::new();
                    table.write_csv(&mut buf)?;
                    let mut s = String::from_utf8_lossy(&buf).into_owned();
                    s.push('\n');
                    s.push_str(&quality_text(&quality, Format::Csv, DecimalSeparator::Dot)?);
                    s
                }
            };
            print(out, &text)?;
        }
    }
    Ok(EXIT_OK)
}
