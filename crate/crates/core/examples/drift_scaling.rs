//! Modified-energy drift of a small rough ensemble as a function of the
//! cutoff `N`, with a log-log fit of the ensemble median.

use gbq::datagen::{rough_data, RoughDataSpec};
use gbq::dynamics::{evolve, Model, Sampling, StepperConfig};
use gbq::imethod::{build_m, drift, scaling_fit, Blend, DriftObserver};
use gbq::rng::member_seed;
use gbq::spectral::FourierGrid;
use gbq::stats::median;

fn main() -> gbq::Result<()> {
    let grid = FourierGrid::new(2.0 * std::f64::consts::PI, 512)?;
    let n_list = [4.0, 8.0, 16.0, 32.0];
    let s = 0.9;
    let model = Model::defocusing(1);
    let mut per_n = vec![Vec::new(); n_list.len()];

    for member in 0..3 {
        let (phi, psi) = rough_data(&RoughDataSpec::new(s, 1.0, member_seed(7, member)), &grid)?;
        let specs = n_list.iter().map(|&n| build_m(n, s, &grid, Blend::SmoothstepLog)).collect::<gbq::Result<Vec<_>>>()?;
        let mut obs = DriftObserver::new(&grid, model.k, specs)?;
        evolve(&phi, &psi, 0.2, &StepperConfig::new(2e-5), model, Sampling::every(250), &mut [&mut obs])?;
        print!("member {member}: raw drift {:.2e}, drifts", obs.raw_drift()?);
        for (i, &n) in n_list.iter().enumerate() {
            let d = drift(&obs, n)?;
            per_n[i].push(d);
            print!(" {d:.2e}");
        }
        println!();
    }

    let points: Vec<(f64, f64)> = n_list.iter().zip(&per_n).map(|(&n, d)| (n, median(d).unwrap())).collect();
    let fit = scaling_fit(&points)?;
    println!("median drift ~ N^{:.3} (r2 {:.4})", fit.slope, fit.r2);
    Ok(())
}
