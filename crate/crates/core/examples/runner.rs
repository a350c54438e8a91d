//! Drive the experiment runner from code instead of the command line.

use histlat::runner::{parse_config, run, RunOptions};

fn main() -> histlat::Result<()> {
    let cfg = parse_config("[run]\nexperiments = stueckelberg, fock_algebra\n", &[])?;
    let out = std::env::temp_dir().join("histlat-runner-example");
    let summary = run(&cfg, &RunOptions { out: out.clone(), workers: 2, seed: None })?;
    for r in &summary.results {
        println!("{}: {} checks, passed = {}", r.name, r.rows.len(), r.passed());
    }
    println!("CSV files in {}", out.display());
    Ok(())
}
