//! The smoothing operator `I_N` on a rough ensemble: both sides of the
//! `H^{s0} -> H^{s0+1-s}` bound over a range of cutoffs.

use gbq::datagen::{rough_spectra, RoughDataSpec};
use gbq::imethod::{smoothing_bounds_check, Blend};
use gbq::spectral::FourierGrid;

fn main() -> gbq::Result<()> {
    let grid = FourierGrid::new(2.0 * std::f64::consts::PI, 1024)?;
    let ensemble = (0..8)
        .map(|seed| rough_spectra(&RoughDataSpec::new(0.6 + 0.05 * seed as f64, 1.0, seed), &grid).map(|(phi, _)| phi))
        .collect::<gbq::Result<Vec<_>>>()?;
    let n_list = [8.0, 16.0, 32.0, 64.0, 128.0];
    for (s0, s) in [(0.9, 0.9), (0.5, 0.7), (0.0, 0.6)] {
        let report = smoothing_bounds_check(&ensemble, s0, s, &n_list, Blend::SmoothstepLog)?;
        println!("s0 = {s0}, s = {s}: {}", if report.pass { "uniform" } else { "NOT uniform" });
        for row in &report.rows {
            println!("    N = {:>4}  lower {:.4}  upper {:.4}", row.n, row.lower_ratio_max, row.upper_ratio_max);
        }
    }
    Ok(())
}
