//! Runs a configured experiment from code, the same way the `gbq` binary
//! does, and prints its criteria.
//!
//! `cargo run --release --example experiment -- configs/convergence.toml convergence`

use gbq::experiments::{run_experiment, write_run, Experiment, ExperimentConfig, SeedSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "configs/convergence.toml".into());
    let experiment: Experiment = args.next().as_deref().unwrap_or("convergence").parse()?;
    let overrides = [("t_end".to_string(), "2.0".to_string())];
    let cfg = ExperimentConfig::load(path.as_ref(), &overrides)?;
    let out = run_experiment(experiment, &cfg, SeedSource::Config)?;
    for c in &out.record.criteria {
        println!("{}", c.line());
    }
    let dir = write_run(&std::env::temp_dir().join("gbq-runs"), &out)?;
    println!("{}", dir.display());
    Ok(())
}
