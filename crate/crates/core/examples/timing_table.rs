//! Times two toy workloads and renders the model x period table.

use std::time::Duration;

use fxbench::bench::{render_timing_table, time_run, Environment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = Environment::capture();
    println!("{}", env.describe());
    let mut records = Vec::new();
    for period in ["2021-10", "2021-11"] {
        for (model, ms) in [("fast", 20), ("slow", 60)] {
            let (record, _) = time_run(model, period, 3, &env, || {
                std::thread::sleep(Duration::from_millis(ms));
                Ok::<_, String>(())
            })?;
            records.push(record);
        }
    }
    let table = render_timing_table(&records)?;
    print!("{}", table.render_markdown());
    Ok(())
}
