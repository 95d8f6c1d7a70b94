//! The linear flow: the exact propagator against the time stepper, and the
//! conserved quadratic energy.

use gbq::datagen::{rough_spectra, RoughDataSpec};
use gbq::dynamics::{Model, SimState, Stepper, StepperConfig};
use gbq::propagators::{free_evolution, linear_energy};
use gbq::spectral::FourierGrid;

fn max_diff(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn main() -> gbq::Result<()> {
    let grid = FourierGrid::new(40.0, 256)?;
    let (phi, psi) = rough_spectra(&RoughDataSpec::new(0.9, 1.0, 11).with_band_limit(20.0), &grid)?;
    let e0 = linear_energy(&phi, &psi);

    for dt in [0.37, 0.05, 0.01] {
        let mut stepper = Stepper::new(&grid, Model::linear(), StepperConfig::new(dt))?;
        let mut state = SimState::from_spectra(phi.clone(), psi.clone(), Model::linear())?;
        let steps = (3.0 / dt).round() as usize;
        for _ in 0..steps {
            stepper.step(&mut state)?;
        }
        let (u, v) = free_evolution(state.t, &phi, &psi)?;
        println!(
            "dt {dt:<5} t {:.2}  |u - exact| {:.2e}  |u_t - exact| {:.2e}  energy drift {:.2e}",
            state.t,
            max_diff(state.u_hat.coeffs(), u.coeffs()),
            max_diff(state.ut_hat.coeffs(), v.coeffs()),
            (linear_energy(&state.u_hat, &state.ut_hat) - e0).abs() / e0
        );
    }
    Ok(())
}
