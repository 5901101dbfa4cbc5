//! Parses raw TrueFX ticks and removes flat areas.
//!
//! `cargo run --example ingest -- path/to/EURUSD-2021-10.csv`

use fxbench::tickdata::{load_series, load_series_file, remove_flat_areas, PriceField};

const SAMPLE: &str = "\
EUR/USD,20211001 00:00:00.123,1.15800,1.15810
EUR/USD,20211001 00:00:00.456,1.15800,1.15810
EUR/USD,20211001 00:00:01.002,1.15801,1.15811
USD/JPY,20211001 00:00:01.010,111.290,111.300
EUR/USD,20211001 00:00:02.750,1.15799,1.15809
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = match std::env::args().nth(1) {
        Some(path) => load_series_file(path, "EUR/USD", PriceField::Mid)?,
        None => load_series(SAMPLE.as_bytes(), "EUR/USD", PriceField::Mid)?,
    };
    let clean = remove_flat_areas(&raw)?;
    println!("{}: {} ticks, {} after flat-area removal", raw.source_label, raw.len(), clean.len());
    for p in clean.points.iter().take(5) {
        println!("  {} {:.6}", p.timestamp_ms, p.mid);
    }
    Ok(())
}
