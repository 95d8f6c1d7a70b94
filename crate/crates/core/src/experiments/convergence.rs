use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::{initial_data, Criterion, ExperimentConfig, Outcome, Table};
use crate::datagen::sci;
use crate::dynamics::{evolve, Model, Sampling, SimState, StepperConfig};
use crate::error::{Error, Result};
use crate::propagators::Propagators;
use crate::spectral::{sobolev_norm, FourierGrid, Spectrum};

fn final_state(cfg: &ExperimentConfig, grid: &FourierGrid, dt: f64, model: Model) -> Result<(SimState, SimState)> {
    let (phi, psi) = initial_data(cfg, grid, cfg.run.seed)?;
    let stepper = StepperConfig::new(dt).with_scheme(cfg.time.scheme);
    let traj = evolve(&phi, &psi, cfg.time.t_end, &stepper, model, Sampling::every(usize::MAX), &mut [])?;
    if let Some(b) = traj.blow_up {
        return Err(Error::BlowUp {
            t: b.t,
            last_good_t: b.last_good_t,
        });
    }
    Ok((traj.initial, traj.final_state))
}

/// Copies `coarse` into the modes of `fine` with the same wavenumbers.
fn embed(coarse: &Spectrum, fine: &FourierGrid) -> Result<Spectrum> {
    let g = coarse.grid();
    let mut out = vec![Complex64::new(0.0, 0.0); fine.modes()];
    for (i, c) in coarse.coeffs().iter().enumerate() {
        let j = fine
            .index_of(g.signed_index(i))
            .ok_or_else(|| Error::GridMismatch("coarse grid does not embed in the fine grid".into()))?;
        out[j] = *c;
    }
    Spectrum::new(fine.clone(), out)
}

fn h1_relative(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    let d = sobolev_norm(&a.axpy(-1.0, b)?, 1.0);
    let scale = sobolev_norm(b, 1.0);
    Ok(if scale > 0.0 { d / scale } else { d })
}

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = &cfg.convergence;
    let tol = &cfg.tolerances;
    let model = cfg.model();
    let grid = cfg.grid()?;
    let mut table = Table::new(
        "convergence",
        ["sweep", "parameter", "difference", "order"].map(String::from).to_vec(),
    );
    let mut criteria = Vec::new();

    let finals = c
        .dt_list
        .par_iter()
        .map(|&dt| final_state(cfg, &grid, dt, model).map(|(_, f)| f))
        .collect::<Result<Vec<_>>>()?;
    let diffs = finals
        .windows(2)
        .map(|w| h1_relative(&w[0].u_hat, &w[1].u_hat))
        .collect::<Result<Vec<_>>>()?;
    let orders: Vec<f64> = diffs
        .windows(2)
        .zip(c.dt_list.windows(2))
        .map(|(d, dt)| (d[0] / d[1]).ln() / (dt[0] / dt[1]).ln())
        .collect();
    for (i, d) in diffs.iter().enumerate() {
        let order = if i >= 1 { sci(orders[i - 1]) } else { String::new() };
        table.push(vec!["dt".into(), sci(c.dt_list[i + 1]), sci(*d), order]);
    }
    let worst_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    criteria.push(Criterion::at_least("temporal_order", worst_order, tol.temporal_order));

    let dt_fine = *c.dt_list.last().expect("validated");
    let mut m_list = c.m_list.clone();
    m_list.sort_unstable();
    let spatial = m_list
        .par_iter()
        .map(|&m| {
            let g = FourierGrid::new(cfg.grid.length, m)?;
            final_state(cfg, &g, dt_fine, model).map(|(_, f)| f)
        })
        .collect::<Result<Vec<_>>>()?;
    let finest = spatial.last().expect("validated");
    let mut worst_spatial = 0.0f64;
    for (m, st) in m_list.iter().zip(&spatial).take(spatial.len() - 1) {
        let d = h1_relative(&embed(&st.u_hat, finest.grid())?, &finest.u_hat)?;
        worst_spatial = worst_spatial.max(d);
        table.push(vec!["modes".into(), m.to_string(), sci(d), String::new()]);
    }
    criteria.push(Criterion::at_most("spatial_difference", worst_spatial, tol.spatial));

    let linear = Model {
        nonlinear: false,
        ..model
    };
    let props = Propagators::new(&grid);
    let linear_errors = c
        .linear_dt_list
        .par_iter()
        .map(|&dt| {
            let (init, fin) = final_state(cfg, &grid, dt, linear)?;
            let (u, ut) = props.free_evolution(fin.t - init.t, &init.u_hat, &init.ut_hat)?;
            Ok(h1_relative(&fin.u_hat, &u)?.max(h1_relative(&fin.ut_hat, &ut)?))
        })
        .collect::<Result<Vec<f64>>>()?;
    for (dt, e) in c.linear_dt_list.iter().zip(&linear_errors) {
        table.push(vec!["linear_dt".into(), sci(*dt), sci(*e), String::new()]);
    }
    let worst_linear = linear_errors.iter().copied().fold(0.0, f64::max);
    criteria.push(Criterion::at_most("linear_exactness", worst_linear, tol.linear));

    Ok(Outcome {
        tables: vec![table],
        summary: json!({
            "dt_list": c.dt_list,
            "dt_differences": diffs,
            "temporal_orders": orders,
            "m_list": m_list,
            "spatial_difference": worst_spatial,
            "linear_dt_list": c.linear_dt_list,
            "linear_errors": linear_errors,
        }),
        criteria,
        warnings: Vec::new(),
        member_seeds: vec![cfg.run.seed],
    })
}
