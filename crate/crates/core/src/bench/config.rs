//! TOML benchmark plan.
//!
//! ```toml
//! schema_version = 1
//!
//! [plan]
//! models = ["custom-ann", "sLSTM-1-1"]   # or ["all"]
//! repetitions = 3
//! mode = "end_to_end"                    # or "predict_only"
//! seed = 42
//!
//! [[datasets]]
//! label = "2021-10"
//! path = "EURUSD-2021-10.csv"           # TrueFX ticks, relative to this file
//! pair = "EUR/USD"
//!
//! [[datasets]]
//! label = "synthetic"
//! [datasets.synthetic]
//! length = 20000
//! ```
//!
//! Optional sections `[custom_ann]`, `[indicators]`, `[lstm]`,
//! `[lstm.scale]`, `[evaluation]` and `[emission]` override defaults.
//! Emission thresholds for every model come from `[emission]`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::evaluation::{DecimalSeparator, VerificationConfig};
use crate::indicators::IndicatorConfig;
use crate::lstm::{ModelSpec, TrainConfig, VolatilityScale};
use crate::paired_ann::{AnnPairConfig, MODEL_LABEL};
use crate::signal::EmissionConfig;
use crate::tickdata::{self, PriceField, PriceSeries, SynthParams};

pub const SCHEMA_VERSION: u32 = 1;

/// A model the harness can time.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ModelRef {
    CustomAnn,
    Lstm(ModelSpec),
}

impl ModelRef {
    pub fn parse(name: &str) -> Result<ModelRef, BenchError> {
        if name == MODEL_LABEL {
            Ok(ModelRef::CustomAnn)
        } else {
            ModelSpec::by_name(name)
                .map(ModelRef::Lstm)
                .map_err(|_| BenchError::InvalidPlan(format!("unknown model {name:?}")))
        }
    }

    /// The custom ANN followed by the eight LSTM baselines.
    pub fn all() -> Vec<ModelRef> {
        std::iter::once(ModelRef::CustomAnn)
            .chain(ModelSpec::all().iter().cloned().map(ModelRef::Lstm))
            .collect()
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelRef::CustomAnn => MODEL_LABEL,
            ModelRef::Lstm(spec) => spec.name,
        }
    }
}

impl fmt::Display for ModelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// LSTMs train and predict on the clock; the custom ANN does its single pass.
    #[default]
    EndToEnd,
    /// LSTM training happens before the clock starts.
    PredictOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub models: Vec<String>,
    pub repetitions: usize,
    pub mode: RunMode,
    pub seed: u64,
}

impl Default for PlanSection {
    fn default() -> Self {
        Self {
            models: vec!["all".to_string()],
            repetitions: 3,
            mode: RunMode::EndToEnd,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    /// `pair,yyyymmdd hh:mm:ss.fff,bid,ask` without header.
    #[default]
    Truefx,
    /// `timestamp_ms,mid` with header.
    Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Period label used for table columns and file names.
    pub label: String,
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: DatasetFormat,
    #[serde(default = "default_pair")]
    pub pair: String,
    #[serde(default)]
    pub price: PriceField,
    #[serde(default = "default_true")]
    pub remove_flat: bool,
    pub synthetic: Option<SynthSection>,
}

/// Synthetic walk; `seed` defaults to the plan seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub length: usize,
    pub start_price: f64,
    pub vol: f64,
    pub drift: f64,
    pub start_ms: i64,
    pub step_ms: i64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let p = SynthParams::default();
        Self {
            seed: None,
            length: p.length,
            start_price: p.start_price,
            vol: p.vol,
            drift: p.drift,
            start_ms: p.start_ms,
            step_ms: p.step_ms,
        }
    }
}

impl SynthSection {
    pub fn params(&self, plan_seed: u64) -> SynthParams {
        SynthParams {
            seed: self.seed.unwrap_or(plan_seed),
            length: self.length,
            start_price: self.start_price,
            vol: self.vol,
            drift: self.drift,
            start_ms: self.start_ms,
            step_ms: self.step_ms,
        }
    }
}

fn default_pair() -> String {
    "EUR/USD".to_string()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmSection {
    #[serde(flatten)]
    pub train: TrainConfig,
    pub scale: VolatilityScale,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationSection {
    #[serde(flatten)]
    pub verification: VerificationConfig,
    pub decimal_separator: DecimalSeparator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub plan: PlanSection,
    #[serde(default)]
    pub datasets: Vec<DatasetSection>,
    #[serde(default)]
    pub custom_ann: AnnPairConfig,
    #[serde(default)]
    pub indicators: IndicatorConfig,
    #[serde(default)]
    pub lstm: LstmSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(default)]
    pub emission: EmissionConfig,
    /// Directory relative dataset paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            plan: PlanSection::default(),
            datasets: Vec::new(),
            custom_ann: AnnPairConfig::default(),
            indicators: IndicatorConfig::default(),
            lstm: LstmSection::default(),
            evaluation: EvaluationSection::default(),
            emission: EmissionConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, BenchError> {
        let mut cfg: BenchConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(BenchError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> Result<String, BenchError> {
        toml::to_string(self).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn models(&self) -> Result<Vec<ModelRef>, BenchError> {
        let mut out: Vec<ModelRef> = Vec::new();
        for name in &self.plan.models {
            let refs = if name == "all" {
                ModelRef::all()
            } else {
                vec![ModelRef::parse(name)?]
            };
            for r in refs {
                if !out.contains(&r) {
                    out.push(r);
                }
            }
        }
        Ok(out)
    }

    /// Custom-ANN config with the plan seed and shared emission thresholds.
    pub fn ann_config(&self) -> AnnPairConfig {
        AnnPairConfig {
            seed: self.plan.seed,
            emission_threshold: self.emission.threshold,
            robust_boundary: self.emission.robust_boundary,
            ..self.custom_ann.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.plan.seed,
            ..self.lstm.train.clone()
        }
    }

    pub fn predict_config(&self) -> crate::lstm::PredictConfig {
        crate::lstm::PredictConfig {
            scale: self.lstm.scale,
            emission: self.emission,
            train_fraction: self.lstm.train.train_fraction,
            pip: self.lstm.train.pip,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.plan.repetitions == 0 {
            return Err(BenchError::InvalidPlan("repetitions must be >= 1".into()));
        }
        if self.models()?.is_empty() {
            return Err(BenchError::InvalidPlan("plan lists no models".into()));
        }
        if self.datasets.is_empty() {
            return Err(BenchError::InvalidPlan("plan lists no datasets".into()));
        }
        let mut labels: Vec<&str> = self.datasets.iter().map(|d| d.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(BenchError::InvalidPlan(format!("duplicate dataset label {:?}", w[0])));
        }
        for d in &self.datasets {
            if d.label.is_empty() || d.path.is_some() == d.synthetic.is_some() {
                return Err(BenchError::InvalidPlan(format!(
                    "dataset {:?} needs a label and exactly one of path / synthetic",
                    d.label
                )));
            }
        }
        self.ann_config().validate().map_err(|e| BenchError::Config(e.to_string()))?;
        self.indicators.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        self.train_config().validate().map_err(|e| BenchError::Config(e.to_string()))?;
        self.evaluation
            .verification
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(())
    }

    /// Loads or generates one dataset.
    pub fn load_dataset(&self, d: &DatasetSection) -> Result<PriceSeries, BenchError> {
        let series = match (&d.path, &d.synthetic) {
            (Some(path), None) => {
                let path = self.base_dir.join(path);
                let loaded = match d.format {
                    DatasetFormat::Truefx => tickdata::load_series_file(&path, &d.pair, d.price),
                    DatasetFormat::Series => PriceSeries::read_csv_file(&path),
                };
                let mut series = loaded.map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))?;
                series.source_label = d.label.clone();
                series
            }
            (None, Some(s)) => {
                let mut series = s
                    .params(self.plan.seed)
                    .generate().map_err(|e| BenchError::Data(e.to_string()))?;
                series.source_label = d.label.clone();
                series
            }
            _ => {
                return Err(BenchError::InvalidPlan(format!(
                    "dataset {:?} needs exactly one of path / synthetic",
                    d.label
                )))
            }
        };
        if d.remove_flat {
            tickdata::remove_flat_areas(&series).map_err(|e| BenchError::Data(e.to_string()))
        } else {
            Ok(series)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schema_version = 1

[plan]
models = ["custom-ann", "sLSTM-15-1,15"]
repetitions = 1
seed = 7

[[datasets]]
label = "synthetic"
[datasets.synthetic]
length = 2500

[lstm]
epochs = 1

[lstm.scale]
rolling = { window = 300 }

[evaluation]
horizon = 600
decimal_separator = "comma"

[emission]
threshold = 0.5
"#;

    #[test]
    fn parses_sample() {
        let cfg = BenchConfig::from_toml(SAMPLE, ".").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.models().unwrap().len(), 2);
        assert_eq!(cfg.train_config().epochs, 1);
        assert_eq!(cfg.train_config().seed, 7);
        assert_eq!(cfg.lstm.scale, VolatilityScale::Rolling { window: 300 });
        assert_eq!(cfg.evaluation.verification.horizon, 600);
        assert_eq!(cfg.evaluation.decimal_separator, DecimalSeparator::Comma);
        assert_eq!(cfg.ann_config().emission_threshold, 0.5);
        let series = cfg.load_dataset(&cfg.datasets[0]).unwrap();
        assert_eq!(series.len(), 2500);
        assert_eq!(series.source_label, "synthetic");
    }

    #[test]
    fn roundtrips_through_toml() {
        let cfg = BenchConfig::from_toml(SAMPLE, ".").unwrap();
        let again = BenchConfig::from_toml(&cfg.to_toml().unwrap(), ".").unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_plans() {
        let no_models = SAMPLE.replace(r#"models = ["custom-ann", "sLSTM-15-1,15"]"#, "models = []");
        let cfg = BenchConfig::from_toml(&no_models, ".").unwrap();
        assert!(matches!(cfg.validate(), Err(BenchError::InvalidPlan(_))));

        let unknown = SAMPLE.replace("custom-ann", "gru");
        assert!(BenchConfig::from_toml(&unknown, ".").unwrap().validate().is_err());

        let zero = SAMPLE.replace("repetitions = 1", "repetitions = 0");
        assert!(BenchConfig::from_toml(&zero, ".").unwrap().validate().is_err());

        let version = SAMPLE.replace("schema_version = 1", "schema_version = 2");
        assert!(BenchConfig::from_toml(&version, ".").is_err());

        let typo = SAMPLE.replace("[plan]", "[plan]\nrepetition = 3");
        assert!(BenchConfig::from_toml(&typo, ".").is_err());
    }

    #[test]
    fn all_expands_to_nine_models() {
        let cfg = BenchConfig::default();
        let models = cfg.models().unwrap();
        assert_eq!(models.len(), 9);
        assert_eq!(models[0], ModelRef::CustomAnn);
    }
}
