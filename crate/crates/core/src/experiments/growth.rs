use rayon::prelude::*;
use serde_json::json;

use super::{growth_bound_exponent, initial_data, member_seeds, Criterion, ExperimentConfig, Outcome, Table};
use crate::datagen::sci;
use crate::dynamics::{evolve, Sampling, SimState, StepperConfig};
use crate::error::{Error, Result};
use crate::functionals::velocity_norm;
use crate::spectral::sobolev_norm;
use crate::stats::{linear_fit, LineFit};

/// `‖u‖²_{H^s} + ‖(-Δ)^{-1/2} u_t‖²_{H^{s-1}}`.
pub fn growth_norm(state: &SimState, s: f64) -> f64 {
    sobolev_norm(&state.u_hat, s).powi(2) + velocity_norm(state, s).powi(2)
}

/// Fits `log sup` against `log(1 + t)` over samples with `t ≥ fit_start`.
pub fn growth_exponent_fit(times: &[f64], sups: &[f64], fit_start: f64) -> Result<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(sups)
        .filter(|(t, v)| **t >= fit_start && **v > 0.0)
        .map(|(t, v)| ((1.0 + t).ln(), v.ln()))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: xs.len(),
        });
    }
    linear_fit(&xs, &ys)
}

struct MemberGrowth {
    times: Vec<f64>,
    norms: Vec<f64>,
    sups: Vec<f64>,
    fit: LineFit,
}

fn member(cfg: &ExperimentConfig, seed: u64) -> Result<MemberGrowth> {
    let grid = cfg.grid()?;
    let (phi, psi) = initial_data(cfg, &grid, seed)?;
    let s = cfg.data.s;
    let mut times = Vec::new();
    let mut norms = Vec::new();
    let mut observer = |state: &SimState| -> Result<()> {
        times.push(state.t);
        norms.push(growth_norm(state, s));
        Ok(())
    };
    let stepper = StepperConfig::new(cfg.time.dt).with_scheme(cfg.time.scheme);
    let traj = evolve(
        &phi,
        &psi,
        cfg.time.t_end,
        &stepper,
        cfg.model(),
        Sampling::every(cfg.run.sample_every),
        &mut [&mut observer],
    )?;
    if let Some(b) = traj.blow_up {
        return Err(Error::BlowUp {
            t: b.t,
            last_good_t: b.last_good_t,
        });
    }
    let sups: Vec<f64> = norms
        .iter()
        .scan(0.0f64, |m, &v| {
            *m = m.max(v);
            Some(*m)
        })
        .collect();
    let fit = growth_exponent_fit(&times, &sups, cfg.growth.fit_start)?;
    Ok(MemberGrowth {
        times,
        norms,
        sups,
        fit,
    })
}

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let bound = growth_bound_exponent(cfg.model.k, cfg.data.s)?;
    let seeds = member_seeds(cfg);
    let members = seeds
        .par_iter()
        .map(|&seed| member(cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new("series", ["member", "t", "norm", "sup"].map(String::from).to_vec());
    for (i, m) in members.iter().enumerate() {
        for j in 0..m.times.len() {
            table.push(vec![i.to_string(), sci(m.times[j]), sci(m.norms[j]), sci(m.sups[j])]);
        }
    }
    let exponents: Vec<f64> = members.iter().map(|m| m.fit.slope).collect();
    let worst = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = bound + cfg.tolerances.growth_margin;
    Ok(Outcome {
        tables: vec![table],
        summary: json!({
            "bound_exponent": bound,
            "threshold": threshold,
            "exponents": exponents,
            "r2": members.iter().map(|m| m.fit.r2).collect::<Vec<_>>(),
            "initial_norm": members.iter().map(|m| m.norms[0]).collect::<Vec<_>>(),
            "final_sup": members.iter().map(|m| *m.sups.last().unwrap_or(&0.0)).collect::<Vec<_>>(),
        }),
        criteria: vec![Criterion::at_most("growth_exponent", worst, threshold)
            .with_detail(format!("bound exponent {bound:.6}"))],
        warnings: Vec::new(),
        member_seeds: seeds,
    })
}
