//! Streams the five indicator families over a synthetic walk.

use fxbench::indicators::{indicator_vector_stream, IndicatorConfig};
use fxbench::tickdata::synthesize_series;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = synthesize_series(1, 3_000, 1.15, 0.00002)?;
    let cfg = IndicatorConfig::default();
    let vectors = indicator_vector_stream(&series, &cfg)?;
    println!("warm-up {} ticks, {} vectors of width {}", cfg.warm_up(), vectors.len(), cfg.input_width());
    println!("{}", cfg.csv_header());
    for v in vectors.iter().step_by(500) {
        let normalized: Vec<String> = v.normalized(&cfg).iter().map(|x| format!("{x:+.3}")).collect();
        println!("{:>5} rsi {:6.2} cci {:8.2} %R {:7.2} -> [{}]", v.index, v.rsi, v.cci, v.williams, normalized.join(" "));
    }
    Ok(())
}
