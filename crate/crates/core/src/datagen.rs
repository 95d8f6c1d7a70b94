//! Initial data: smooth profiles, seeded rough ensembles and CSV files.
//!
//! Rough data follow the spectral law
//!
//! ```text
//! |φ̂(ξ)| = A ⟨ξ⟩^{-(s+1/2)},   |ψ̂(ξ)| = A ⟨ξ⟩^{-(s-1/2)},   ψ̂(0) = 0
//! ```
//!
//! so `‖φ‖_{H^σ}` converges under grid refinement for `σ < s` and diverges
//! for `σ ≥ s`. Phases come from [`CounterRng`] keyed by the signed mode
//! index, so a mode keeps its phase when the grid is refined.

use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::PSI_MEAN_TOL;
use crate::error::{Error, Result};
use crate::rng::{mode_counter, CounterRng};
use crate::spectral::{bracket, inverse, Field, FourierGrid, Spectrum};

/// Largest admissible `φ(±L/2) / A` for the Gaussian profile.
pub const GAUSSIAN_EDGE_TOL: f64 = 1e-10;

/// `φ = A exp(-x²/(2w²))`, `ψ = 0`.
pub fn gaussian_data(amplitude: f64, width: f64, grid: &FourierGrid) -> Result<(Field, Field)> {
    if !(width > 0.0 && width.is_finite()) || !amplitude.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Gaussian needs finite amplitude and positive width, got A = {amplitude}, w = {width}"
        )));
    }
    let half = 0.5 * grid.length();
    let edge = (-half * half / (2.0 * width * width)).exp();
    if edge > GAUSSIAN_EDGE_TOL {
        return Err(Error::InvalidArgument(format!(
            "Gaussian of width {width} is {edge:.3e} of its peak at the boundary of a torus of length {}",
            grid.length()
        )));
    }
    let phi = Field::from_fn(grid, |x| amplitude * (-x * x / (2.0 * width * width)).exp())?;
    Ok((phi, Field::zeros(grid)))
}

/// How the phases of `φ̂` and `ψ̂` are related.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phases {
    /// Independent uniform phases for `φ` and `ψ`.
    #[default]
    Independent,
    /// `ψ̂ = -⟨ξ⟩ φ̂`: every mode of the free solution travels to the right.
    Unidirectional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoughDataSpec {
    /// Target regularity `s`.
    pub s: f64,
    pub amplitude: f64,
    pub seed: u64,
    #[serde(default)]
    pub phases: Phases,
    /// Zero every mode with `|ξ|` above this value.
    #[serde(default)]
    pub band_limit: Option<f64>,
}

impl RoughDataSpec {
    pub fn new(s: f64, amplitude: f64, seed: u64) -> Self {
        Self {
            s,
            amplitude,
            seed,
            phases: Phases::Independent,
            band_limit: None,
        }
    }

    pub fn with_phases(mut self, phases: Phases) -> Self {
        self.phases = phases;
        self
    }

    pub fn with_band_limit(mut self, limit: f64) -> Self {
        self.band_limit = Some(limit);
        self
    }
}

const PHI_STREAM: u64 = 0;
const PSI_STREAM: u64 = 1;

/// Spectra `(φ̂, ψ̂)` of [`rough_data`].
pub fn rough_spectra(spec: &RoughDataSpec, grid: &FourierGrid) -> Result<(Spectrum, Spectrum)> {
    if !spec.s.is_finite() || !spec.amplitude.is_finite() {
        return Err(Error::InvalidArgument("rough data parameters must be finite".into()));
    }
    let m = grid.modes();
    let phi_rng = CounterRng::new(spec.seed, PHI_STREAM);
    let psi_rng = CounterRng::new(spec.seed, PSI_STREAM);
    let a = spec.amplitude;
    let mut phi = vec![Complex64::new(0.0, 0.0); m];
    let mut psi = vec![Complex64::new(0.0, 0.0); m];
    let keep = |xi: f64| spec.band_limit.is_none_or(|b| xi.abs() <= b);

    phi[0] = Complex64::new(a * (TAU * phi_rng.uniform(mode_counter(0))).cos(), 0.0);
    for j in 1..m / 2 {
        let xi = grid.xi()[j];
        if !keep(xi) {
            continue;
        }
        let b = bracket(xi);
        let theta = TAU * phi_rng.uniform(mode_counter(j as i64));
        let p = Complex64::from_polar(a * b.powf(-(spec.s + 0.5)), theta);
        let q = match spec.phases {
            Phases::Independent => {
                let eta = TAU * psi_rng.uniform(mode_counter(j as i64));
                Complex64::from_polar(a * b.powf(-(spec.s - 0.5)), eta)
            }
            Phases::Unidirectional => -p * b,
        };
        phi[j] = p;
        phi[m - j] = p.conj();
        psi[j] = q;
        psi[m - j] = q.conj();
    }
    Ok((Spectrum::new(grid.clone(), phi)?, Spectrum::new(grid.clone(), psi)?))
}

/// Seeded random data at regularity `s`; deterministic in `(spec, grid)`.
pub fn rough_data(spec: &RoughDataSpec, grid: &FourierGrid) -> Result<(Field, Field)> {
    let (phi, psi) = rough_spectra(spec, grid)?;
    let phi = inverse(&phi)?;
    let mut psi = inverse(&psi)?;
    // the inverse transform leaves a round-off mean; remove it
    let mean = psi.mean();
    psi.values.iter_mut().for_each(|v| *v -= mean);
    Ok((phi, psi))
}

/// Reads a CSV with header `x,phi,psi` and exactly `M` rows.
pub fn load_data(path: &Path, grid: &FourierGrid) -> Result<(Field, Field)> {
    let bad = |reason: String| Error::DataFile {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "phi", "psi"] {
        return Err(bad(format!("expected header `x,phi,psi`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let records = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    let m = grid.modes();
    if records.len() != m {
        return Err(bad(format!("expected {m} data rows, found {}", records.len())));
    }
    let points = grid.points();
    let mut phi = Vec::with_capacity(m);
    let mut psi = Vec::with_capacity(m);
    for (row, record) in records.iter().enumerate() {
        let mut vals = [0.0; 3];
        for (c, v) in vals.iter_mut().enumerate() {
            let text = record.get(c).ok_or_else(|| bad(format!("row {} has fewer than 3 columns", row + 1)))?;
            *v = text
                .parse()
                .map_err(|_| bad(format!("row {} column {}: `{text}` is not a number", row + 1, c + 1)))?;
        }
        if (vals[0] - points[row]).abs() > 1e-9 * grid.dx() {
            return Err(bad(format!(
                "row {}: x = {} does not match grid point {}",
                row + 1,
                vals[0],
                points[row]
            )));
        }
        phi.push(vals[1]);
        psi.push(vals[2]);
    }
    let phi = Field::new(grid.clone(), phi)?;
    let psi = Field::new(grid.clone(), psi)?;
    let mean = psi.mean();
    let scale = psi.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if mean.abs() > PSI_MEAN_TOL * scale {
        return Err(Error::NonzeroMean { mean });
    }
    Ok((phi, psi))
}

/// Writes `x,phi,psi` rows with 17 significant digits.
pub fn save_data(path: &Path, phi: &Field, psi: &Field) -> Result<()> {
    phi.grid().check_same(psi.grid(), "save_data")?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "phi", "psi"])?;
    for ((x, a), b) in phi.grid().points().iter().zip(phi.values()).zip(psi.values()) {
        w.write_record([sci(*x), sci(*a), sci(*b)])?;
    }
    w.flush()?;
    Ok(())
}

/// Decimal text with 17 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}
