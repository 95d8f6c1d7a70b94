//! Evolves a Gaussian pulse and prints energy and Sobolev norms along the
//! trajectory.

use gbq::datagen::gaussian_data;
use gbq::dynamics::{evolve, Model, Sampling, StepperConfig};
use gbq::functionals::NormObserver;
use gbq::imethod::{build_m, Blend};
use gbq::spectral::FourierGrid;

fn main() -> gbq::Result<()> {
    let grid = FourierGrid::new(80.0, 1024)?;
    let (phi, psi) = gaussian_data(1.0, 1.0, &grid)?;
    let model = Model::defocusing(1);
    let m = build_m(2.0, 0.9, &grid, Blend::SmoothstepLog)?;
    let mut norms = NormObserver::new(&grid, model.k, &[0.5, 0.9], Some(m))?;

    let traj = evolve(&phi, &psi, 5.0, &StepperConfig::new(1e-3), model, Sampling::every(500), &mut [&mut norms])?;

    let e0 = norms.rows[0].energy;
    println!("{:>6} {:>14} {:>10} {:>10} {:>10} {:>14}", "t", "E", "drift", "H^0.5", "H^0.9", "E(Iu), N=2");
    for row in &norms.rows {
        println!(
            "{:>6.2} {:>14.10} {:>10.2e} {:>10.5} {:>10.5} {:>14.10}",
            row.t,
            row.energy,
            (row.energy - e0).abs() / e0.abs(),
            row.hs[0],
            row.hs[1],
            row.modified.unwrap_or(f64::NAN)
        );
    }
    println!("{} steps, completed: {}", traj.steps, traj.completed());
    Ok(())
}
