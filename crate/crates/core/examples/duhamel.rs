//! Checks a computed trajectory against the integral form of the equation.

use gbq::datagen::gaussian_data;
use gbq::dynamics::{duhamel_residual, evolve, Model, Quadrature, Sampling, StepperConfig};
use gbq::spectral::FourierGrid;

fn main() -> gbq::Result<()> {
    let grid = FourierGrid::new(40.0, 256)?;
    let (phi, psi) = gaussian_data(1.0, 1.0, &grid)?;
    for k in [1, 2] {
        let traj = evolve(&phi, &psi, 1.0, &StepperConfig::new(1e-3), Model::defocusing(k), Sampling::keeping(1), &mut [])?;
        println!(
            "k = {k}: residual (Simpson) {:.3e}, (trapezoid) {:.3e}",
            duhamel_residual(&traj, Quadrature::Simpson)?,
            duhamel_residual(&traj, Quadrature::Trapezoid)?
        );
    }
    Ok(())
}
