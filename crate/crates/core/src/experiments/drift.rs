use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{initial_data, member_seeds, Criterion, ExperimentConfig, Outcome, Table};
use crate::datagen::sci;
use crate::dynamics::{evolve, Sampling, StepperConfig};
use crate::error::{Error, Result};
use crate::imethod::{build_m, drift, scaling_fit, DriftObserver, ScalingFit};
use crate::stats::median;

#[derive(Debug, Clone, Serialize)]
struct MemberDrift {
    seed: u64,
    drifts: Vec<f64>,
    raw_drift: f64,
    steps: usize,
}

fn simulate_member(cfg: &ExperimentConfig, seed: u64) -> Result<MemberDrift> {
    let grid = cfg.grid()?;
    let n_list = &cfg.imethod.n_list;
    if let Some(p) = cfg.imethod.synthetic_exponent {
        return Ok(MemberDrift {
            seed,
            drifts: n_list.iter().map(|n| n.powf(p)).collect(),
            raw_drift: 0.0,
            steps: 0,
        });
    }
    let (phi, psi) = initial_data(cfg, &grid, seed)?;
    let specs = n_list
        .iter()
        .map(|&n| build_m(n, cfg.data.s, &grid, cfg.imethod.blend))
        .collect::<Result<Vec<_>>>()?;
    let mut obs = DriftObserver::new(&grid, cfg.model.k, specs)?;
    let stepper = StepperConfig::new(cfg.time.dt).with_scheme(cfg.time.scheme);
    let traj = evolve(
        &phi,
        &psi,
        cfg.time.t_end,
        &stepper,
        cfg.model(),
        Sampling::every(cfg.run.sample_every),
        &mut [&mut obs],
    )?;
    if let Some(b) = traj.blow_up {
        return Err(Error::BlowUp {
            t: b.t,
            last_good_t: b.last_good_t,
        });
    }
    Ok(MemberDrift {
        seed,
        drifts: n_list.iter().map(|&n| drift(&obs, n)).collect::<Result<_>>()?,
        raw_drift: obs.raw_drift()?,
        steps: traj.steps,
    })
}

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seeds = member_seeds(cfg);
    let members = seeds
        .par_iter()
        .map(|&seed| simulate_member(cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    let n_list = &cfg.imethod.n_list;
    let tol = &cfg.tolerances;

    let mut table = Table::new(
        "drift",
        ["member", "N", "drift", "noise_floor", "flagged"].map(String::from).to_vec(),
    );
    let mut warnings = Vec::new();
    let mut flagged_total = 0usize;
    let mut member_fits: Vec<Option<ScalingFit>> = Vec::new();
    for (i, m) in members.iter().enumerate() {
        let floor = tol.noise_factor * m.raw_drift;
        let mut points = Vec::new();
        for (&n, &d) in n_list.iter().zip(&m.drifts) {
            let flagged = d <= floor;
            if flagged {
                flagged_total += 1;
                warnings.push(format!(
                    "member {i}: drift {d:.3e} at N = {n} is within {}x of the raw drift {:.3e}",
                    tol.noise_factor, m.raw_drift
                ));
            }
            // flagged points enter the fit as dropped
            points.push((n, if flagged { 0.0 } else { d }));
            table.push(vec![i.to_string(), sci(n), sci(d), sci(floor), flagged.to_string()]);
        }
        let fit = scaling_fit(&points).ok();
        if fit.is_none() {
            warnings.push(format!("member {i}: too few points above the noise floor to fit"));
        }
        member_fits.push(fit);
    }

    let medians: Vec<(f64, f64)> = n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let col: Vec<f64> = members.iter().map(|m| m.drifts[j]).collect();
            (n, median(&col).unwrap_or(0.0))
        })
        .collect();
    let median_raw = median(&members.iter().map(|m| m.raw_drift).collect::<Vec<_>>()).unwrap_or(0.0);
    let median_fit = scaling_fit(&medians);
    let slopes: Vec<f64> = member_fits.iter().flatten().map(|f| f.slope).collect();

    let mut criteria = Vec::new();
    match &median_fit {
        Ok(f) => {
            criteria.push(Criterion::at_most("median_fit_slope", f.slope, tol.drift_slope));
            criteria.push(Criterion::at_least("median_fit_r2", f.r2, tol.drift_r2));
        }
        Err(e) => {
            warnings.push(format!("median fit failed: {e}"));
            criteria.push(Criterion::at_most("median_fit_slope", f64::NAN, tol.drift_slope));
            criteria.push(Criterion::at_least("median_fit_r2", f64::NAN, tol.drift_r2));
        }
    }
    criteria.push(Criterion::at_most("points_below_noise_floor", flagged_total as f64, 0.0));

    Ok(Outcome {
        tables: vec![table],
        summary: json!({
            "n_list": n_list,
            "median_drifts": medians.iter().map(|p| p.1).collect::<Vec<_>>(),
            "median_raw_drift": median_raw,
            "median_fit": median_fit.ok(),
            "member_fits": member_fits,
            "median_member_slope": median(&slopes),
            "members": members,
        }),
        criteria,
        warnings,
        member_seeds: seeds,
    })
}
