//! Verifies hand-made signals and prints the STA/STS table.

use fxbench::evaluation::{aggregate, verify_signals, DecimalSeparator, VerificationConfig};
use fxbench::signal::{emit_signals, EmissionConfig};
use fxbench::tickdata::synthesize_series;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = synthesize_series(8, 4_000, 1.15, 0.00002)?;
    let mids = series.mids();
    // a look-ahead oracle: intensity follows the next 50-tick move, so it should mostly succeed
    let intensities = (0..series.len() - 50).map(|t| {
        let pips = (mids[t + 50] - mids[t]) / 0.0001;
        (t, series.timestamp_ms(t), (pips / 2.0).clamp(-3.0, 3.0))
    });
    let signals = emit_signals(intensities, EmissionConfig::default(), "look-ahead");
    let cfg = VerificationConfig::default();
    let outcomes = verify_signals(&signals, &series, &cfg)?;
    println!("{} signals, verification: {}", signals.len(), cfg.describe());
    print!("{}", aggregate(&outcomes).render_markdown(DecimalSeparator::Comma));
    Ok(())
}
