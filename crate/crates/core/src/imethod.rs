//! The smoothing multiplier `I_N` and the almost-conservation primitives.
//!
//! The symbol is
//!
//! ```text
//! m_N(ξ) = 1                    |ξ| ≤ N
//!        = (N/|ξ|)^{1-s}        |ξ| ≥ 2N
//! ```
//!
//! and on `N < |ξ| < 2N` interpolates `log m` in `log |ξ|`: with
//! `r = log₂(|ξ|/N)` and a smoothstep `S`, `log m = -(1-s) S(r) log(|ξ|/N)`.
//! The quintic `S(r) = 10r³ - 15r⁴ + 6r⁵` makes both junctions C², the cubic
//! `S(r) = 3r² - 2r³` only C¹. Either way `m` is even, nonincreasing in
//! `|ξ|`, and `0 < m ≤ 1`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Observer, SimState};
use crate::error::{Error, Result};
use crate::functionals::EnergyEvaluator;
use crate::spectral::{apply_multiplier, sobolev_norm, FourierGrid, Spectrum, SymbolTable};
use crate::stats::{linear_fit, LineFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Blend {
    /// Quintic smoothstep in `log |ξ|` (C² junctions).
    #[default]
    SmoothstepLog,
    /// Cubic smoothstep in `log |ξ|` (C¹ junctions).
    PiecewiseC1,
}

impl Blend {
    fn step(self, r: f64) -> f64 {
        match self {
            Blend::SmoothstepLog => r * r * r * (10.0 + r * (-15.0 + 6.0 * r)),
            Blend::PiecewiseC1 => r * r * (3.0 - 2.0 * r),
        }
    }
}

/// `m_N(ξ)`.
pub fn multiplier_symbol(xi: f64, n: f64, s: f64, blend: Blend) -> f64 {
    let a = xi.abs();
    if a <= n {
        1.0
    } else if a >= 2.0 * n {
        (n / a).powf(1.0 - s)
    } else {
        let l = (a / n).ln();
        let r = l / std::f64::consts::LN_2;
        (-(1.0 - s) * blend.step(r) * l).exp()
    }
}

/// Sampled multiplier for one `(N, s)` pair on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSpec {
    n: f64,
    s: f64,
    blend: Blend,
    table: SymbolTable,
    values: Vec<f64>,
}

impl MultiplierSpec {
    /// `m ≡ 1` on every resolved mode.
    pub fn identity(grid: &FourierGrid) -> Self {
        Self {
            n: f64::INFINITY,
            s: 1.0,
            blend: Blend::default(),
            table: SymbolTable::ones(grid),
            values: vec![1.0; grid.modes()],
        }
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn blend(&self) -> Blend {
        self.blend
    }

    pub fn is_identity(&self) -> bool {
        self.n.is_infinite()
    }

    pub fn grid(&self) -> &FourierGrid {
        self.table.grid()
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    /// Real symbol samples in storage order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Continuous symbol (not restricted to grid points).
    pub fn symbol(&self, xi: f64) -> f64 {
        if self.is_identity() {
            1.0
        } else {
            multiplier_symbol(xi, self.n, self.s, self.blend)
        }
    }

    /// Short label used in column names, e.g. `N16`.
    pub fn label(&self) -> String {
        if self.is_identity() {
            "identity".to_string()
        } else {
            format!("N{}", self.n)
        }
    }
}

pub fn build_m(n: f64, s: f64, grid: &FourierGrid, blend: Blend) -> Result<MultiplierSpec> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("target regularity s must lie in (0, 1), got {s}")));
    }
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation frequency must be positive, got {n}")));
    }
    if n >= grid.nyquist() {
        return Err(Error::InvalidArgument(format!(
            "N = {n} is not below the Nyquist wavenumber {:.6}; the decay region is unresolved",
            grid.nyquist()
        )));
    }
    let values: Vec<f64> = grid.xi().iter().map(|&x| multiplier_symbol(x, n, s, blend)).collect();
    let table = SymbolTable::from_real_fn(grid, |x| multiplier_symbol(x, n, s, blend))?;
    Ok(MultiplierSpec {
        n,
        s,
        blend,
        table,
        values,
    })
}

pub fn apply_i(f: &Spectrum, m: &MultiplierSpec) -> Result<Spectrum> {
    apply_multiplier(f, &m.table)
}

/// Per-`N` maxima of the two smoothing ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingRow {
    pub n: f64,
    /// `max ‖u‖_{H^{s0}} / ‖Iu‖_{H^{s0+1-s}}`
    pub lower_ratio_max: f64,
    /// `max ‖Iu‖_{H^{s0+1-s}} / (N^{1-s} ‖u‖_{H^{s0}})`
    pub upper_ratio_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingReport {
    pub s0: f64,
    pub s: f64,
    pub rows: Vec<SmoothingRow>,
    pub pass: bool,
}

/// Empirical check that `I` gains `1 - s` derivatives at a cost of
/// `N^{1-s}`, uniformly in `N`.
pub fn smoothing_bounds_check(
    ensemble: &[Spectrum],
    s0: f64,
    s: f64,
    n_list: &[f64],
    blend: Blend,
) -> Result<SmoothingReport> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("empty N list".into()));
    }
    let grid = first.grid().clone();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let m = build_m(n, s, &grid, blend)?;
        let mut lower: f64 = 0.0;
        let mut upper: f64 = 0.0;
        for u in ensemble {
            let iu = apply_i(u, &m)?;
            let base = sobolev_norm(u, s0);
            let smoothed = sobolev_norm(&iu, s0 + 1.0 - s);
            if base == 0.0 {
                continue;
            }
            lower = lower.max(base / smoothed);
            upper = upper.max(smoothed / (n.powf(1.0 - s) * base));
        }
        rows.push(SmoothingRow {
            n,
            lower_ratio_max: lower,
            upper_ratio_max: upper,
        });
    }
    let ref_row = rows
        .iter()
        .min_by(|a, b| a.n.total_cmp(&b.n))
        .expect("rows is nonempty");
    let lower_max = rows.iter().map(|r| r.lower_ratio_max).fold(0.0, f64::max);
    let upper_max = rows.iter().map(|r| r.upper_ratio_max).fold(0.0, f64::max);
    let pass = lower_max <= 2.0 * ref_row.lower_ratio_max && upper_max <= 2.0 * ref_row.upper_ratio_max;
    Ok(SmoothingReport { s0, s, rows, pass })
}

/// Records the raw energy and the modified energies of several multipliers
/// at every sample of a trajectory.
#[derive(Debug)]
pub struct DriftObserver {
    evaluator: EnergyEvaluator,
    specs: Vec<MultiplierSpec>,
    times: Vec<f64>,
    raw: Vec<f64>,
    modified: Vec<Vec<f64>>,
}

impl DriftObserver {
    pub fn new(grid: &FourierGrid, k: u32, specs: Vec<MultiplierSpec>) -> Result<Self> {
        for m in &specs {
            grid.check_same(m.grid(), "drift observer")?;
        }
        let n = specs.len();
        Ok(Self {
            evaluator: EnergyEvaluator::new(grid, k)?,
            specs,
            times: Vec::new(),
            raw: Vec::new(),
            modified: vec![Vec::new(); n],
        })
    }

    pub fn specs(&self) -> &[MultiplierSpec] {
        &self.specs
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn raw_series(&self) -> &[f64] {
        &self.raw
    }

    pub fn series(&self, n: f64) -> Result<&[f64]> {
        self.specs
            .iter()
            .position(|m| m.n() == n)
            .map(|i| self.modified[i].as_slice())
            .ok_or_else(|| Error::MissingObserver(format!("modified energy with N = {n}")))
    }

    pub fn raw_drift(&self) -> Result<f64> {
        sup_drift(&self.raw)
    }
}

impl Observer for DriftObserver {
    fn observe(&mut self, state: &SimState) -> Result<()> {
        self.times.push(state.t);
        self.raw.push(self.evaluator.energy(state)?.total);
        for (m, series) in self.specs.iter().zip(self.modified.iter_mut()) {
            series.push(self.evaluator.modified_energy(state, m)?.total);
        }
        Ok(())
    }
}

fn sup_drift(series: &[f64]) -> Result<f64> {
    let first = *series
        .first()
        .ok_or_else(|| Error::Sampling("observer recorded no samples".into()))?;
    Ok(series.iter().map(|e| (e - first).abs()).fold(0.0, f64::max))
}

/// `sup_t |E(Iu)(t) - E(Iu)(0)|` over the observer's samples.
pub fn drift(observer: &DriftObserver, n: f64) -> Result<f64> {
    sup_drift(observer.series(n)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `(N, drift)` pairs used in the fit.
    pub used: Vec<(f64, f64)>,
    /// Points dropped because their drift was not positive.
    pub dropped: Vec<(f64, f64)>,
}

/// Least-squares fit of `log drift` against `log N`.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: points.len() });
    }
    let (used, dropped): (Vec<_>, Vec<_>) = points.iter().partition(|(_, d)| *d > 0.0 && d.is_finite());
    let xs: Vec<f64> = used.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|(_, d)| d.ln()).collect();
    let LineFit { slope, intercept, r2 } = linear_fit(&xs, &ys)?;
    Ok(ScalingFit {
        slope,
        intercept,
        r2,
        used,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn grid() -> FourierGrid {
        FourierGrid::new(2.0 * PI, 512).unwrap()
    }

    #[test]
    fn branch_values() {
        let n = 16.0;
        assert_eq!(multiplier_symbol(n / 2.0, n, 0.5, Blend::SmoothstepLog), 1.0);
        assert_relative_eq!(multiplier_symbol(4.0 * n, n, 0.5, Blend::SmoothstepLog), 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            multiplier_symbol(2.0 * n, n, 0.75, Blend::SmoothstepLog),
            0.840_896_415_253_714_6,
            max_relative = 1e-15
        );
    }

    #[test]
    fn table_contract() {
        let g = grid();
        for blend in [Blend::SmoothstepLog, Blend::PiecewiseC1] {
            for &(n, s) in &[(8.0, 0.9), (16.0, 0.6), (32.0, 0.3)] {
                let m = build_m(n, s, &g, blend).unwrap();
                let mut by_xi: Vec<(f64, f64)> = g.xi().iter().copied().zip(m.values().iter().copied()).collect();
                by_xi.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
                for w in by_xi.windows(2) {
                    assert!(w[1].1 <= w[0].1 + 1e-15);
                }
                for &(x, v) in &by_xi {
                    assert!(v > 0.0 && v <= 1.0);
                    if x.abs() <= n {
                        assert_eq!(v, 1.0);
                    }
                    if x.abs() >= 2.0 * n {
                        assert_eq!(v, (n / x.abs()).powf(1.0 - s));
                    }
                    assert_eq!(v, m.symbol(-x));
                }
            }
        }
    }

    #[test]
    fn junctions_are_c1() {
        for blend in [Blend::SmoothstepLog, Blend::PiecewiseC1] {
            let (n, s) = (16.0, 0.7);
            let h = 1e-4 * n;
            let scale = (1.0 - s) / n;
            for x in [n, 2.0 * n] {
                let f = |y| multiplier_symbol(y, n, s, blend);
                let left = (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h);
                let right = (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h);
                assert!((left - right).abs() <= 1e-6 * scale, "{blend:?} at {x}: {left} vs {right}");
            }
        }
    }

    #[test]
    fn nyquist_sentinel_rejected() {
        let g = grid();
        assert!(build_m(g.nyquist(), 0.5, &g, Blend::default()).is_err());
        assert!(build_m(8.0, 1.0, &g, Blend::default()).is_err());
        assert!(build_m(-1.0, 0.5, &g, Blend::default()).is_err());
    }

    #[test]
    fn apply_i_examples() {
        let g = grid();
        let m = build_m(8.0, 0.5, &g, Blend::default()).unwrap();
        let mut f = Spectrum::zeros(&g);
        for j in -8..=8i64 {
            f.coeffs_mut()[g.index_of(j).unwrap()] = Complex64::new(1.0 / (1.0 + j.abs() as f64), 0.0);
        }
        assert_eq!(apply_i(&f, &m).unwrap(), f);

        let mut hi = Spectrum::zeros(&g);
        hi.coeffs_mut()[g.index_of(32).unwrap()] = Complex64::new(2.0, 0.0);
        assert_relative_eq!(apply_i(&hi, &m).unwrap().mode(32).re, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn single_high_mode_ratios_closed_form() {
        let g = grid();
        let (n, s, s0) = (8.0, 0.5, 0.3);
        let mut hi = Spectrum::zeros(&g);
        hi.coeffs_mut()[g.index_of(32).unwrap()] = Complex64::new(1.0, 0.0);
        hi.coeffs_mut()[g.index_of(-32).unwrap()] = Complex64::new(1.0, 0.0);
        let report = smoothing_bounds_check(&[hi], s0, s, &[n], Blend::default()).unwrap();
        let b = (1.0f64 + 32.0 * 32.0).sqrt();
        assert_relative_eq!(report.rows[0].lower_ratio_max, (4.0 / b).powf(1.0 - s), max_relative = 1e-13);
        assert_relative_eq!(report.rows[0].upper_ratio_max, (b / 32.0).powf(1.0 - s), max_relative = 1e-13);
    }

    #[test]
    fn scaling_fit_examples() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0].iter().map(|&n: &f64| (n, n.powi(-2))).collect();
        let f = scaling_fit(&pts).unwrap();
        assert!((f.slope + 2.0).abs() <= 1e-12);
        assert_relative_eq!(f.r2, 1.0, max_relative = 1e-12);
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0].iter().map(|&n: &f64| (n, 7.0 * n.powf(-1.5))).collect();
        let f = scaling_fit(&pts).unwrap();
        assert!((f.slope + 1.5).abs() <= 1e-12);
        assert!((f.intercept - 7f64.ln()).abs() <= 1e-12);

        let pts = vec![(8.0, 1e-2), (16.0, 2.5e-3), (32.0, 0.0), (64.0, 1.5e-4)];
        let f = scaling_fit(&pts).unwrap();
        assert_eq!(f.dropped, vec![(32.0, 0.0)]);
        assert_eq!(f.used.len(), 3);
        assert!(scaling_fit(&pts[..3]).is_err());
    }
}
