//! Trains one LSTM baseline, checkpoints it and emits held-out signals.
//!
//! `cargo run --release --example lstm_baseline -- sLSTM-15-1`

use fxbench::lstm::train::predict_span;
use fxbench::lstm::{build_model, predict_signals, read_checkpoint, train, write_checkpoint, ModelSpec, PredictConfig, TrainConfig};
use fxbench::tickdata::PriceSeries;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// 2-pip sine of period 40 ticks under 0.3-pip noise.
fn sine_series(len: usize) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.00003).expect("valid normal");
    let mids: Vec<f64> = (0..len)
        .map(|t| 1.15 + 0.0002 * (t as f64 * std::f64::consts::TAU / 40.0).sin() + noise.sample(&mut rng))
        .collect();
    PriceSeries::from_mids(&mids, "sine")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "biLSTM-15-1".to_string());
    let spec = ModelSpec::by_name(&name)?;
    println!(
        "{}: {} units, dense {}, lookback {}",
        spec.name,
        spec.lstm_units,
        spec.dense_description(),
        spec.lookback
    );
    let series = sine_series(2_000);
    let mut model = build_model(&spec, 7)?;
    let report = train(&mut model, &series, &TrainConfig::default())?;
    println!("{} samples, {} steps, epoch losses {:?}", report.samples, report.steps, report.epoch_losses);

    let mut bytes = Vec::new();
    write_checkpoint(&model, &mut bytes)?;
    let restored = read_checkpoint(bytes.as_slice())?;
    let pcfg = PredictConfig::default();
    let predictions = predict_span(&restored, &series, &pcfg)?;
    let (lo, hi) = predictions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    let signals = predict_signals(&restored, &series, &pcfg)?;
    println!(
        "checkpoint {} bytes; held-out predictions in [{lo:+.3}, {hi:+.3}] pips; {} signals",
        bytes.len(),
        signals.len()
    );
    for s in signals.iter().take(5) {
        println!("  tick {:>5} {:<4} intensity {:+.3}", s.index, s.direction.as_str(), s.intensity);
    }
    Ok(())
}
