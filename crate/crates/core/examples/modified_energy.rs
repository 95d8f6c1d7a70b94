//! Differentiates the modified energy `E(Iu)` numerically along a rough
//! trajectory and compares it with the commutator pairing.

use gbq::datagen::{rough_data, Phases, RoughDataSpec};
use gbq::dynamics::{evolve, Model, Sampling, SimState, StepperConfig};
use gbq::experiments::acl_analysis;
use gbq::functionals::EnergyEvaluator;
use gbq::imethod::{build_m, Blend};
use gbq::spectral::FourierGrid;

fn main() -> gbq::Result<()> {
    let grid = FourierGrid::new(2.0 * std::f64::consts::PI, 128)?;
    let spec = RoughDataSpec::new(0.9, 1.0, 5).with_phases(Phases::Unidirectional);
    let (phi, psi) = rough_data(&spec, &grid)?;
    let model = Model::defocusing(1);
    let (dt, h) = (1e-5, 1e-4);

    for n in [8.0, 32.0] {
        let m = build_m(n, spec.s, &grid, Blend::SmoothstepLog)?;
        let mut eval = EnergyEvaluator::new(&grid, model.k)?;
        let (mut energy, mut pairing) = (Vec::new(), Vec::new());
        let mut observe = |state: &SimState| -> gbq::Result<()> {
            energy.push(eval.modified_energy(state, &m)?.total);
            pairing.push(eval.commutator_pairing(state, &m)?);
            Ok(())
        };
        evolve(&phi, &psi, 0.02, &StepperConfig::new(dt), model, Sampling::every(10), &mut [&mut observe])?;
        let a = acl_analysis(&energy, &pairing, h)?;
        println!(
            "N = {n:>3}: max |dE/dt - pairing| / max|pairing| = {:.2e}; integral errors {:.2e} {:.2e} {:.2e} (order {:.2})",
            a.pointwise_rel, a.ftc_errors[0], a.ftc_errors[1], a.ftc_errors[2], a.ftc_order
        );
    }
    Ok(())
}
