//! Runs a whole plan and writes the report bundle.
//!
//! `cargo run --release --example full_bench -- configs/default.toml results`

use std::path::PathBuf;

use fxbench::bench::{run_bench, BenchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/smoke.toml"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("fxbench-example"));
    let cfg = BenchConfig::load(&config)?;
    let outcome = run_bench(&cfg, &out)?;
    print!("{}", outcome.table.render_markdown());
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
