//! Running supremum of `‖u‖²_{H^s} + ‖u_t‖²_{H^{s-1}}` for one rough
//! trajectory, fitted against the polynomial bound.

use gbq::datagen::{rough_data, RoughDataSpec};
use gbq::dynamics::{evolve, Model, Sampling, SimState, StepperConfig};
use gbq::experiments::{growth_bound_exponent, growth_exponent_fit};
use gbq::functionals::velocity_norm;
use gbq::spectral::{sobolev_norm, FourierGrid};

fn main() -> gbq::Result<()> {
    let grid = FourierGrid::new(2.0 * std::f64::consts::PI, 128)?;
    let s = 0.9;
    let (phi, psi) = rough_data(&RoughDataSpec::new(s, 1.0, 3), &grid)?;
    let (mut times, mut sups) = (Vec::new(), Vec::new());
    let mut sup: f64 = 0.0;
    let mut observe = |state: &SimState| -> gbq::Result<()> {
        let norm = sobolev_norm(&state.u_hat, s).powi(2) + velocity_norm(state, s).powi(2);
        sup = sup.max(norm);
        times.push(state.t);
        sups.push(sup);
        Ok(())
    };
    evolve(&phi, &psi, 50.0, &StepperConfig::new(1e-4), Model::defocusing(1), Sampling::every(5000), &mut [&mut observe])?;
    let fit = growth_exponent_fit(&times, &sups, 1.0)?;
    println!("sup norm at t = {:.0}: {:.6} (initial {:.6})", times.last().unwrap(), sups.last().unwrap(), sups[0]);
    println!("fitted exponent {:.3e}, bound {:.4}", fit.slope, growth_bound_exponent(1, s)?);
    Ok(())
}
