use serde_json::json;

use super::{Criterion, ExperimentConfig, Outcome, Table};
use crate::datagen::sci;
use crate::error::Result;
use crate::estimates::{bilinear_sweep, strichartz_sweep, SweepConfig};
use crate::rng::member_seed;

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let e = &cfg.estimates;
    let sweep = SweepConfig {
        length: cfg.grid.length,
        window: e.window,
        b: e.b,
        members: cfg.run.members,
        seed: cfg.run.seed,
    };
    let mut reports = strichartz_sweep(&sweep, &cfg.pairs(), &e.scales)?;
    reports.push(bilinear_sweep(&sweep, e.bilinear_n1, &e.bilinear_n2)?);

    let mut table = Table::new(
        "ratios",
        ["estimate", "scale", "max", "median", "modes", "time_samples"]
            .map(String::from)
            .to_vec(),
    );
    let mut criteria = Vec::new();
    for r in &reports {
        for row in &r.rows {
            table.push(vec![
                r.estimate.clone(),
                sci(row.scale),
                sci(row.max),
                sci(row.median),
                row.modes.to_string(),
                row.time_samples.to_string(),
            ]);
        }
        criteria.push(Criterion::at_most(
            format!("uniform_{}", r.estimate),
            r.growth,
            cfg.tolerances.ratio_growth,
        ));
    }
    Ok(Outcome {
        tables: vec![table],
        summary: json!({ "reports": reports }),
        criteria,
        warnings: Vec::new(),
        member_seeds: (0..2 * cfg.run.members as u64)
            .map(|m| member_seed(cfg.run.seed, m))
            .collect(),
    })
}
