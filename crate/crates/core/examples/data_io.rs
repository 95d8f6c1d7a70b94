//! Builds rough initial data, writes it to CSV and reads it back.

use gbq::datagen::{load_data, rough_data, save_data, RoughDataSpec};
use gbq::spectral::{forward, sobolev_norm, FourierGrid};

fn main() -> gbq::Result<()> {
    let grid = FourierGrid::new(2.0 * std::f64::consts::PI, 256)?;
    let (phi, psi) = rough_data(&RoughDataSpec::new(0.8, 1.0, 42), &grid)?;
    let dir = std::env::temp_dir().join("gbq-data-io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("rough.csv");
    save_data(&path, &phi, &psi)?;
    let (phi2, psi2) = load_data(&path, &grid)?;
    println!("wrote {}", path.display());
    println!("round trip exact: {}", phi.values() == phi2.values() && psi.values() == psi2.values());
    let spec = forward(&phi2)?;
    for sigma in [0.0, 0.5, 0.7, 0.9, 1.0] {
        println!("|phi|_H^{sigma:<3} = {:.6}", sobolev_norm(&spec, sigma));
    }
    Ok(())
}
