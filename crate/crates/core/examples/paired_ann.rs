//! The adaptive paired-ANN forecaster on a 20k-tick random walk.

use fxbench::evaluation::{aggregate, verify_signals, DecimalSeparator, VerificationConfig};
use fxbench::indicators::IndicatorConfig;
use fxbench::paired_ann::{run_custom_ann, AnnPairConfig};
use fxbench::tickdata::SynthParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = SynthParams {
        seed: 10,
        ..SynthParams::default()
    }
    .generate()?;
    let started = std::time::Instant::now();
    let signals = run_custom_ann(&series, &AnnPairConfig::default(), &IndicatorConfig::default())?;
    println!("{} ticks, {} signals in {:.3} s", series.len(), signals.len(), started.elapsed().as_secs_f64());
    for s in signals.iter().take(8) {
        println!("  tick {:>5} {:<4} intensity {:+.3}", s.index, s.direction.as_str(), s.intensity);
    }
    let outcomes = verify_signals(&signals, &series, &VerificationConfig::default())?;
    print!("{}", aggregate(&outcomes).render_markdown(DecimalSeparator::Dot));
    Ok(())
}
