use serde_json::json;

use super::{initial_data, n_label, Criterion, ExperimentConfig, Outcome, Table};
use crate::dynamics::{evolve, Sampling, SimState, StepperConfig};
use crate::error::Result;
use crate::functionals::EnergyEvaluator;
use crate::imethod::build_m;
use crate::spectral::sobolev_norm;

/// Column names of `series.csv` for a config.
pub(crate) fn series_columns(cfg: &ExperimentConfig) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "E", "E_rel_drift", "H1"].map(String::from).to_vec();
    cols.extend(cfg.norms.s_list.iter().map(|s| format!("Hs_{s}")));
    cols.push("L2kp2".into());
    cols.extend(cfg.imethod.n_list.iter().map(|&n| format!("EIu_{}", n_label(n))));
    cols
}

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let model = cfg.model();
    let (phi, psi) = initial_data(cfg, &grid, cfg.run.seed)?;
    let specs = cfg
        .imethod
        .n_list
        .iter()
        .map(|&n| build_m(n, cfg.data.s, &grid, cfg.imethod.blend))
        .collect::<Result<Vec<_>>>()?;
    let mut evaluator = EnergyEvaluator::new(&grid, model.k)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut e0 = None;
    let mut observer = |state: &SimState| -> Result<()> {
        let e = evaluator.energy(state)?.total;
        let e0 = *e0.get_or_insert(e);
        let drift = if e0 != 0.0 { ((e - e0) / e0).abs() } else { (e - e0).abs() };
        let mut row = vec![state.t, e, drift, sobolev_norm(&state.u_hat, 1.0)];
        row.extend(cfg.norms.s_list.iter().map(|&s| sobolev_norm(&state.u_hat, s)));
        row.push(evaluator.potential_norm(state)?);
        for m in &specs {
            row.push(evaluator.modified_energy(state, m)?.total);
        }
        rows.push(row);
        Ok(())
    };
    let stepper = StepperConfig::new(cfg.time.dt).with_scheme(cfg.time.scheme);
    let traj = evolve(
        &phi,
        &psi,
        cfg.time.t_end,
        &stepper,
        model,
        Sampling::every(cfg.run.sample_every),
        &mut [&mut observer],
    )?;

    let mut table = Table::new("series", series_columns(cfg));
    for r in &rows {
        table.push_numbers(r);
    }
    let max_drift = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    let reached = traj.final_state.t;
    if let Some(b) = traj.blow_up {
        warnings.push(format!(
            "solution left the finite range at t = {}; series ends at t = {}",
            b.t, b.last_good_t
        ));
    }
    let criteria = vec![
        Criterion::at_least("completed", reached, cfg.time.t_end),
        Criterion::at_most("energy_rel_drift", max_drift, cfg.tolerances.energy_drift),
    ];
    Ok(Outcome {
        tables: vec![table],
        summary: json!({
            "steps": traj.steps,
            "final_time": reached,
            "samples": rows.len(),
            "max_energy_rel_drift": max_drift,
            "blow_up": traj.blow_up,
        }),
        criteria,
        warnings,
        member_seeds: vec![cfg.run.seed],
    })
}

#[cfg(test)]
mod tests {
    use super::super::{run_experiment, DataKind, Experiment, SeedSource};
    use super::*;

    #[test]
    fn zero_data_gives_zero_series() {
        let mut cfg = ExperimentConfig::default();
        cfg.data.kind = DataKind::Zero;
        cfg.grid.modes = 64;
        cfg.imethod.n_list = vec![8.0];
        cfg.time.t_end = 0.05;
        cfg.run.sample_every = 5;
        let out = run_experiment(Experiment::Simulate, &cfg, SeedSource::Config).unwrap();
        assert!(out.record.pass);
        let t = out.table("series").unwrap();
        assert_eq!(t.columns, series_columns(&cfg));
        assert_eq!(t.rows.len(), 11);
        for c in &t.columns[1..] {
            assert!(t.column(c).unwrap().iter().all(|&v| v == 0.0), "{c}");
        }
    }

    #[test]
    fn column_set_depends_on_config_only() {
        let mut cfg = ExperimentConfig::default();
        cfg.norms.s_list = vec![0.25];
        cfg.imethod.n_list = vec![4.0, 8.0];
        assert_eq!(
            series_columns(&cfg),
            ["t", "E", "E_rel_drift", "H1", "Hs_0.25", "L2kp2", "EIu_N4", "EIu_N8"]
        );
    }
}
