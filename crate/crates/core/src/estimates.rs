//! Discrete space-time norms and empirical Strichartz and bilinear checks.
//!
//! A [`SpaceTimeBlock`] holds samples `χ(t_q) u(t_q, x_n)` on a window
//! `[0, T_w]` with the smooth bump
//!
//! ```text
//! χ(t) = exp(1 - 1/(1 - r²)),   r = (2t - T_w)/T_w
//! ```
//!
//! which vanishes with all derivatives at both ends, so the periodic
//! temporal DFT approximates the transform on the line. The norm
//!
//! ```text
//! ‖u‖²_{X_{s,b}} = (1/(L T_w)) Σ_{j,q} ⟨|τ_q| - γ(ξ_j)⟩^{2b} ⟨ξ_j⟩^{2s} |F̃(ξ_j, τ_q)|²
//! ```
//!
//! uses the continuum normalization of [`crate::spectral`] in both variables.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagators::{dispersion, PropagatorCache};
use crate::rng::{member_seed, mode_counter, CounterRng};
use crate::spectral::{complex_plan, forward_raw, inverse_raw, lp_norm_samples, FourierGrid, Spectrum};
use crate::stats::median;

/// Temporal bump supported on `[0, window]` with `χ(window/2) = 1`.
pub fn cutoff(t: f64, window: f64) -> f64 {
    let r = (2.0 * t - window) / window;
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

/// Smallest power of two `Q ≥ 64` whose temporal Nyquist `πQ/T_w` is at
/// least `1.25 γ_max`.
pub fn time_samples_for(gamma_max: f64, window: f64) -> usize {
    let needed = (1.25 * gamma_max * window / PI).ceil().max(64.0) as usize;
    needed.next_power_of_two()
}

/// Cutoff-weighted samples of a real function on `[0, T_w) × torus`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeBlock {
    grid: FourierGrid,
    window: f64,
    steps: usize,
    /// `values[q * M + n] = χ(t_q) u(t_q, x_n)`
    values: Vec<f64>,
}

impl SpaceTimeBlock {
    /// Wraps already weighted samples laid out time-major.
    pub fn new(grid: &FourierGrid, window: f64, steps: usize, values: Vec<f64>) -> Result<Self> {
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
        }
        if steps < 2 || !steps.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "time sample count must be a power of two, got {steps}"
            )));
        }
        if values.len() != steps * grid.modes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                steps * grid.modes(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "space-time sample",
                index,
            });
        }
        Ok(Self {
            grid: grid.clone(),
            window,
            steps,
            values,
        })
    }

    /// Samples `χ(t) f(t, x)`.
    pub fn from_fn(grid: &FourierGrid, window: f64, steps: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let dt = window / steps as f64;
        let xs = grid.points();
        let mut values = Vec::with_capacity(steps * grid.modes());
        for q in 0..steps {
            let t = q as f64 * dt;
            let c = cutoff(t, window);
            values.extend(xs.iter().map(|&x| c * f(t, x)));
        }
        Self::new(grid, window, steps, values)
    }

    /// Cutoff free solution with data `û(0) = φ̂`, `û_t(0) = ψ̂_x`.
    pub fn free_solution(phi_hat: &Spectrum, psix_hat: &Spectrum, window: f64, steps: usize) -> Result<Self> {
        let grid = phi_hat.grid().clone();
        grid.check_same(psix_hat.grid(), "free_solution block")?;
        let gamma: Vec<f64> = grid.xi().iter().map(|&x| dispersion(x)).collect();
        let m = grid.modes();
        let dt = window / steps as f64;
        let mut values = Vec::with_capacity(steps * m);
        let mut u = vec![Complex64::new(0.0, 0.0); m];
        let mut ut = vec![Complex64::new(0.0, 0.0); m];
        for q in 0..steps {
            let t = q as f64 * dt;
            u.copy_from_slice(phi_hat.coeffs());
            ut.copy_from_slice(psix_hat.coeffs());
            PropagatorCache::new(&gamma, t).advance(&mut u, &mut ut);
            inverse_raw(grid.length(), &mut u);
            let c = cutoff(t, window);
            values.extend(u.iter().map(|z| c * z.re));
        }
        Self::new(&grid, window, steps, values)
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn time_samples(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.window / self.steps as f64
    }

    pub fn value(&self, n: usize, q: usize) -> f64 {
        self.values[q * self.grid.modes() + n]
    }

    /// Spatial samples at time index `q`.
    pub fn slice(&self, q: usize) -> &[f64] {
        let m = self.grid.modes();
        &self.values[q * m..(q + 1) * m]
    }

    /// Pointwise product of two blocks on the same grid and window.
    pub fn product(&self, other: &SpaceTimeBlock) -> Result<SpaceTimeBlock> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(SpaceTimeBlock {
            values,
            ..self.clone()
        })
    }

    /// Applies a spatial Fourier multiplier to every time slice.
    pub fn map_spatial_symbol(&self, symbol: impl Fn(f64) -> f64) -> SpaceTimeBlock {
        let m = self.grid.modes();
        let weights: Vec<f64> = self.grid.xi().iter().map(|&x| symbol(x)).collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let mut values = Vec::with_capacity(self.values.len());
        for q in 0..self.steps {
            for (b, &v) in buf.iter_mut().zip(self.slice(q)) {
                *b = Complex64::new(v, 0.0);
            }
            forward_raw(self.grid.length(), &mut buf);
            for (b, w) in buf.iter_mut().zip(&weights) {
                *b *= *w;
            }
            inverse_raw(self.grid.length(), &mut buf);
            values.extend(buf.iter().map(|z| z.re));
        }
        SpaceTimeBlock {
            values,
            ..self.clone()
        }
    }

    fn check_compatible(&self, other: &SpaceTimeBlock) -> Result<()> {
        self.grid.check_same(&other.grid, "space-time block")?;
        if self.window != other.window || self.steps != other.steps {
            return Err(Error::GridMismatch("space-time blocks use different time samples".into()));
        }
        Ok(())
    }
}

/// Zero-padding factor of the temporal transform. The weighted τ-sum is a
/// Riemann sum of a smooth integrand; padding refines its spacing to
/// `2π/(4 T_w)`.
pub const TIME_PADDING: usize = 4;

/// `‖u‖_{X_{s,b}}` for several `(s, b)` pairs from one transform.
pub fn xsb_norms(block: &SpaceTimeBlock, weights: &[(f64, f64)]) -> Vec<f64> {
    let grid = &block.grid;
    let m = grid.modes();
    let q_len = block.steps;
    let padded = q_len * TIME_PADDING;
    let half = m / 2;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); q_len * (half + 1)];
    let mut row = vec![Complex64::new(0.0, 0.0); m];
    for q in 0..q_len {
        for (r, &v) in row.iter_mut().zip(block.slice(q)) {
            *r = Complex64::new(v, 0.0);
        }
        forward_raw(grid.length(), &mut row);
        for j in 0..=half {
            coeffs[j * q_len + q] = row[j];
        }
    }
    let period = block.window * TIME_PADDING as f64;
    let tau: Vec<f64> = (0..padded)
        .map(|q| {
            let k = if q < padded / 2 { q as f64 } else { q as f64 - padded as f64 };
            2.0 * PI * k / period
        })
        .collect();
    let plan = complex_plan(padded, false);
    let dt2 = block.dt() * block.dt();
    let mut column = vec![Complex64::new(0.0, 0.0); padded];
    let mut sums = vec![0.0; weights.len()];
    let mut distinct_b: Vec<f64> = Vec::new();
    for &(_, b) in weights {
        if !distinct_b.contains(&b) {
            distinct_b.push(b);
        }
    }
    let mut inner = vec![0.0; distinct_b.len()];
    for j in 0..=half {
        column[..q_len].copy_from_slice(&coeffs[j * q_len..(j + 1) * q_len]);
        column[q_len..].iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        if column[..q_len].iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        plan.process(&mut column);
        let xi = grid.xi()[j];
        let g = dispersion(xi);
        let mult = if j == 0 || j == half { 1.0 } else { 2.0 };
        for (inner, &b) in inner.iter_mut().zip(&distinct_b) {
            *inner = 0.0;
            for (c, &t) in column.iter().zip(&tau) {
                let p = c.norm_sqr();
                if b == 0.0 {
                    *inner += p;
                } else {
                    let d = t.abs() - g;
                    *inner += (b * (d * d).ln_1p()).exp() * p;
                }
            }
        }
        for (sum, &(s, b)) in sums.iter_mut().zip(weights) {
            let space = if s == 0.0 { 1.0 } else { (1.0 + xi * xi).powf(s) };
            let k = distinct_b.iter().position(|&v| v == b).expect("b is listed");
            *sum += mult * space * inner[k] * dt2;
        }
    }
    let norm = 1.0 / (grid.length() * period);
    sums.into_iter().map(|v| (v * norm).sqrt()).collect()
}

pub fn xsb_norm(block: &SpaceTimeBlock, s: f64, b: f64) -> f64 {
    xsb_norms(block, &[(s, b)])[0]
}

/// `‖u‖_{L^q_t L^p_x}` over the samples (`∞` allowed in either slot).
pub fn mixed_norm(block: &SpaceTimeBlock, q: f64, p: f64) -> Result<f64> {
    let dx = block.grid.dx();
    let inner = (0..block.steps)
        .map(|i| lp_norm_samples(block.slice(i), dx, p))
        .collect::<Result<Vec<_>>>()?;
    lp_norm_samples(&inner, block.dt(), q)
}

/// A Lebesgue exponent pair `(q, p)` for `L^q_t L^p_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub q: f64,
    pub p: f64,
}

impl ExponentPair {
    pub const fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    /// `2/q = 1/2 - 1/p`, or one of the pairs `(6,6)`, `(4,4)`, `(∞,∞)`,
    /// `(2,2)`.
    pub fn is_admissible(&self) -> bool {
        let special = [(6.0, 6.0), (4.0, 4.0), (f64::INFINITY, f64::INFINITY), (2.0, 2.0)];
        if special.contains(&(self.q, self.p)) {
            return true;
        }
        if !(self.q >= 2.0 && self.p >= 2.0) {
            return false;
        }
        (2.0 / self.q - (0.5 - 1.0 / self.p)).abs() <= 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "exponent pair (q, p) = ({}, {}) is not admissible",
                self.q, self.p
            )))
        }
    }

    /// Spatial regularity on the right-hand side: `b` for `(∞,∞)`, else 0.
    pub fn sobolev_index(&self, b: f64) -> f64 {
        if self.q.is_infinite() && self.p.is_infinite() {
            b
        } else {
            0.0
        }
    }

    pub fn label(&self) -> String {
        let f = |v: f64| if v.is_infinite() { "inf".to_string() } else { format!("{v}") };
        format!("L{}L{}", f(self.q), f(self.p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioStats {
    pub values: Vec<f64>,
    pub max: f64,
    pub median: f64,
}

impl RatioStats {
    fn from_values(values: Vec<f64>) -> Result<Self> {
        let med = median(&values).ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            values,
            max,
            median: med,
        })
    }
}

/// `‖u‖_{L^q_t L^p_x} / ‖u‖_{X_{σ,b}}` per member.
pub fn strichartz_ratio(ensemble: &[SpaceTimeBlock], pair: ExponentPair, b: f64) -> Result<RatioStats> {
    pair.validate()?;
    let sigma = pair.sobolev_index(b);
    let values = ensemble
        .par_iter()
        .map(|blk| {
            let lhs = mixed_norm(blk, pair.q, pair.p)?;
            let rhs = xsb_norm(blk, sigma, b);
            Ok(if lhs == 0.0 { 0.0 } else { lhs / rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    RatioStats::from_values(values)
}

/// `‖(D^{1/2} ψ₁) ψ₂‖_{L²_{x,t}}` for two blocks.
pub fn bilinear_lhs(low: &SpaceTimeBlock, high: &SpaceTimeBlock) -> Result<f64> {
    let d = low.map_spatial_symbol(|x| x.abs().sqrt());
    mixed_norm(&d.product(high)?, 2.0, 2.0)
}

/// `‖(D^{1/2} ψ₁) ψ₂‖_{L²} / (‖ψ₁‖_{X_{0,b}} ‖ψ₂‖_{X_{0,b}})` per pair.
pub fn bilinear_ratio(pairs: &[(SpaceTimeBlock, SpaceTimeBlock)], b: f64) -> Result<RatioStats> {
    let values = pairs
        .par_iter()
        .map(|(low, high)| {
            let lhs = bilinear_lhs(low, high)?;
            if lhs == 0.0 {
                return Ok(0.0);
            }
            Ok(lhs / (xsb_norm(low, 0.0, b) * xsb_norm(high, 0.0, b)))
        })
        .collect::<Result<Vec<_>>>()?;
    RatioStats::from_values(values)
}

/// Random-phase band data: unit amplitudes on `lo ≤ |ξ| < hi` for both
/// `φ̂` and `γ⁻¹ψ̂_x`.
pub fn band_data(grid: &FourierGrid, lo: f64, hi: f64, seed: u64) -> Result<(Spectrum, Spectrum)> {
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("empty frequency band [{lo}, {hi})")));
    }
    if hi > grid.nyquist() {
        return Err(Error::InvalidArgument(format!(
            "band top {hi} exceeds the Nyquist wavenumber {}",
            grid.nyquist()
        )));
    }
    let m = grid.modes();
    let a_rng = CounterRng::new(seed, 2);
    let b_rng = CounterRng::new(seed, 3);
    let mut phi = vec![Complex64::new(0.0, 0.0); m];
    let mut vel = vec![Complex64::new(0.0, 0.0); m];
    for j in 1..m / 2 {
        let xi = grid.xi()[j];
        if xi < lo || xi >= hi {
            continue;
        }
        let c = mode_counter(j as i64);
        let p = Complex64::from_polar(1.0, 2.0 * PI * a_rng.uniform(c));
        let v = Complex64::from_polar(dispersion(xi), 2.0 * PI * b_rng.uniform(c));
        phi[j] = p;
        phi[m - j] = p.conj();
        vel[j] = v;
        vel[m - j] = v.conj();
    }
    if lo == 0.0 {
        phi[0] = Complex64::new(1.0, 0.0);
    }
    Ok((Spectrum::new(grid.clone(), phi)?, Spectrum::new(grid.clone(), vel)?))
}

/// Parameters shared by the estimate sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub length: f64,
    pub window: f64,
    pub b: f64,
    pub members: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            length: 2.0 * PI,
            window: 0.125,
            b: 0.55,
            members: 8,
            seed: 20_240_601,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.window > 0.0 && self.members > 0 && self.b >= 0.0) {
            return Err(Error::InvalidArgument("invalid estimate sweep configuration".into()));
        }
        Ok(())
    }

    /// Grid whose Nyquist exceeds twice `top`, with at least 64 modes.
    fn grid_for(&self, top: f64) -> Result<FourierGrid> {
        let unit = 2.0 * PI / self.length;
        let modes = ((4.0 * top / unit).ceil() as usize + 1).next_power_of_two().max(64);
        FourierGrid::new(self.length, modes)
    }

    fn block(&self, grid: &FourierGrid, lo: f64, hi: f64, member: usize, steps: usize) -> Result<SpaceTimeBlock> {
        let (phi, vel) = band_data(grid, lo, hi, member_seed(self.seed, member as u64))?;
        SpaceTimeBlock::free_solution(&phi, &vel, self.window, steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scale: f64,
    pub max: f64,
    pub median: f64,
    pub modes: usize,
    pub time_samples: usize,
}

/// One estimate over a frequency sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub estimate: String,
    pub rows: Vec<SweepRow>,
    /// Largest-scale max over smallest-scale max.
    pub growth: f64,
    pub pass: bool,
}

impl SweepReport {
    fn new(estimate: String, rows: Vec<SweepRow>) -> Self {
        let first = rows.first().map_or(0.0, |r| r.max);
        let last = rows.last().map_or(0.0, |r| r.max);
        let growth = if first > 0.0 { last / first } else { f64::INFINITY };
        let pass = last <= 2.0 * first;
        Self {
            estimate,
            rows,
            growth,
            pass,
        }
    }
}

/// Strichartz ratios for every pair over dyadic bands `[N, 2N)`, `N` in
/// `scales` (ascending).
pub fn strichartz_sweep(cfg: &SweepConfig, pairs: &[ExponentPair], scales: &[f64]) -> Result<Vec<SweepReport>> {
    cfg.validate()?;
    for p in pairs {
        p.validate()?;
    }
    if scales.is_empty() {
        return Err(Error::InvalidArgument("empty scale list".into()));
    }
    let mut rows: Vec<Vec<SweepRow>> = vec![Vec::new(); pairs.len()];
    for &n in scales {
        let grid = cfg.grid_for(2.0 * n)?;
        let steps = time_samples_for(dispersion(2.0 * n), cfg.window);
        let per_member = (0..cfg.members)
            .into_par_iter()
            .map(|member| {
                let blk = cfg.block(&grid, n, 2.0 * n, member, steps)?;
                let weights: Vec<(f64, f64)> = pairs
                    .iter()
                    .map(|pair| {
                        let b = if pair.q == 2.0 && pair.p == 2.0 { 0.0 } else { cfg.b };
                        (pair.sobolev_index(b), b)
                    })
                    .collect();
                let norms = xsb_norms(&blk, &weights);
                pairs
                    .iter()
                    .zip(norms)
                    .map(|(pair, rhs)| Ok(mixed_norm(&blk, pair.q, pair.p)? / rhs))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, r) in rows.iter_mut().enumerate() {
            let stats = RatioStats::from_values(per_member.iter().map(|v| v[i]).collect())?;
            r.push(SweepRow {
                scale: n,
                max: stats.max,
                median: stats.median,
                modes: grid.modes(),
                time_samples: steps,
            });
        }
    }
    Ok(pairs
        .iter()
        .zip(rows)
        .map(|(p, r)| SweepReport::new(p.label(), r))
        .collect())
}

/// Bilinear ratios for `ψ₁` on `[N₁, 2N₁)` and `ψ₂` on `[N₂, 2N₂)`.
pub fn bilinear_sweep(cfg: &SweepConfig, n1: f64, n2_list: &[f64]) -> Result<SweepReport> {
    cfg.validate()?;
    if n2_list.is_empty() {
        return Err(Error::InvalidArgument("empty N2 list".into()));
    }
    let mut rows = Vec::with_capacity(n2_list.len());
    for &n2 in n2_list {
        if n2 < 4.0 * n1 {
            return Err(Error::InvalidArgument(format!(
                "bilinear supports need N2 >= 4 N1, got N1 = {n1}, N2 = {n2}"
            )));
        }
        let grid = cfg.grid_for(2.0 * (n1 + n2))?;
        let steps = time_samples_for(dispersion(2.0 * n2), cfg.window);
        let pairs = (0..cfg.members)
            .into_par_iter()
            .map(|member| {
                let low = cfg.block(&grid, n1, 2.0 * n1, 2 * member, steps)?;
                let high = cfg.block(&grid, n2, 2.0 * n2, 2 * member + 1, steps)?;
                Ok((low, high))
            })
            .collect::<Result<Vec<_>>>()?;
        let stats = bilinear_ratio(&pairs, cfg.b)?;
        rows.push(SweepRow {
            scale: n2,
            max: stats.max,
            median: stats.median,
            modes: grid.modes(),
            time_samples: steps,
        });
    }
    Ok(SweepReport::new(format!("bilinear_N1={n1}"), rows))
}
