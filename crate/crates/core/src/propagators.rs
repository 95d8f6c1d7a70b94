//! Exact free evolution of the linearized equation `û_tt + γ(ξ)² û = 0`
//! with dispersion `γ(ξ) = (ξ² + ξ⁴)^{1/2}`.
//!
//! The cosine propagator multiplies by `cos(tγ)`, the sine propagator by
//! `sin(tγ)/γ` (value `t` at `ξ = 0`).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::error::Result;
use crate::spectral::{FourierGrid, Spectrum, SymbolTable};

/// Below this `|tγ|` the sine propagator uses its Taylor series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;

pub fn dispersion(xi: f64) -> f64 {
    let x2 = xi * xi;
    (x2 + x2 * x2).sqrt()
}

pub fn gamma(grid: &FourierGrid) -> SymbolTable {
    SymbolTable::from_real_fn(grid, dispersion).expect("dispersion is finite on any grid")
}

/// `sin(tγ)/γ`, continuous through `γ = 0`.
#[inline]
pub fn sine_weight(t: f64, gamma: f64) -> f64 {
    let phase = t * gamma;
    if phase.abs() < SINC_SERIES_CUTOFF {
        let p2 = phase * phase;
        t * (1.0 - p2 / 6.0 + p2 * p2 / 120.0)
    } else {
        phase.sin() / gamma
    }
}

/// Per-step propagator tables for one step size `h`.
#[derive(Debug, Clone)]
pub struct PropagatorCache {
    pub(crate) h: f64,
    pub(crate) cos: Vec<f64>,
    /// `sin(hγ)/γ`
    pub(crate) sinc: Vec<f64>,
    /// `γ sin(hγ)`
    pub(crate) gsin: Vec<f64>,
}

impl PropagatorCache {
    pub fn new(gamma: &[f64], h: f64) -> Self {
        let mut cos = Vec::with_capacity(gamma.len());
        let mut sinc = Vec::with_capacity(gamma.len());
        let mut gsin = Vec::with_capacity(gamma.len());
        for &g in gamma {
            let (s, c) = (h * g).sin_cos();
            cos.push(c);
            sinc.push(sine_weight(h, g));
            gsin.push(g * s);
        }
        Self { h, cos, sinc, gsin }
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn cos_table(&self) -> &[f64] {
        &self.cos
    }

    pub fn sinc_table(&self) -> &[f64] {
        &self.sinc
    }

    /// Advances `(û, û_t)` in place by the cached step.
    pub fn advance(&self, u: &mut [Complex64], ut: &mut [Complex64]) {
        for i in 0..u.len() {
            let (a, b) = (u[i], ut[i]);
            u[i] = a * self.cos[i] + b * self.sinc[i];
            ut[i] = b * self.cos[i] - a * self.gsin[i];
        }
    }
}

/// Dispersion table plus a cache of step tables keyed by the bit pattern of
/// the step size.
#[derive(Debug)]
pub struct Propagators {
    grid: FourierGrid,
    gamma: Vec<f64>,
    tables: RwLock<HashMap<u64, Arc<PropagatorCache>>>,
}

impl Propagators {
    pub fn new(grid: &FourierGrid) -> Self {
        let gamma = grid.xi().iter().map(|&x| dispersion(x)).collect();
        Self {
            grid: grid.clone(),
            gamma,
            tables: RwLock::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn table(&self, h: f64) -> Arc<PropagatorCache> {
        let key = h.to_bits();
        if let Some(t) = self.tables.read().expect("propagator cache poisoned").get(&key) {
            return t.clone();
        }
        let table = Arc::new(PropagatorCache::new(&self.gamma, h));
        self.tables
            .write()
            .expect("propagator cache poisoned")
            .entry(key)
            .or_insert(table)
            .clone()
    }

    pub fn apply_vc(&self, t: f64, f: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(f.grid(), "apply_vc")?;
        let mut out = f.clone();
        for (c, &g) in out.coeffs_mut().iter_mut().zip(&self.gamma) {
            *c *= (t * g).cos();
        }
        Ok(out)
    }

    pub fn apply_vs(&self, t: f64, f: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(f.grid(), "apply_vs")?;
        let mut out = f.clone();
        for (c, &g) in out.coeffs_mut().iter_mut().zip(&self.gamma) {
            *c *= sine_weight(t, g);
        }
        Ok(out)
    }

    /// `(û(t), û_t(t))` for data `(φ̂, ψ̂_x)`.
    pub fn free_evolution(
        &self,
        t: f64,
        phi_hat: &Spectrum,
        psix_hat: &Spectrum,
    ) -> Result<(Spectrum, Spectrum)> {
        self.grid.check_same(phi_hat.grid(), "free_evolution")?;
        self.grid.check_same(psix_hat.grid(), "free_evolution")?;
        let mut u = phi_hat.clone();
        let mut ut = psix_hat.clone();
        PropagatorCache::new(&self.gamma, t).advance(u.coeffs_mut(), ut.coeffs_mut());
        Ok((u, ut))
    }
}

/// Convenience wrappers that build the dispersion table on the fly.
pub fn apply_vc(t: f64, f: &Spectrum) -> Spectrum {
    Propagators::new(f.grid()).apply_vc(t, f).expect("same grid")
}

pub fn apply_vs(t: f64, f: &Spectrum) -> Spectrum {
    Propagators::new(f.grid()).apply_vs(t, f).expect("same grid")
}

pub fn free_evolution(t: f64, phi_hat: &Spectrum, psix_hat: &Spectrum) -> Result<(Spectrum, Spectrum)> {
    Propagators::new(phi_hat.grid()).free_evolution(t, phi_hat, psix_hat)
}

/// `½‖u‖²_{H¹} + ½‖|ξ|^{-1} û_t‖²`, conserved by the free flow.
pub fn linear_energy(u: &Spectrum, ut: &Spectrum) -> f64 {
    let l = u.grid().length();
    let mut sum = 0.0;
    for ((&x, a), b) in u.grid().xi().iter().zip(u.coeffs()).zip(ut.coeffs()) {
        sum += (1.0 + x * x) * a.norm_sqr();
        if x != 0.0 {
            sum += b.norm_sqr() / (x * x);
        }
    }
    0.5 * sum / l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward, sobolev_norm, Field};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn single_mode(g: &FourierGrid, j: i64) -> Spectrum {
        let mut s = Spectrum::zeros(g);
        s.coeffs_mut()[g.index_of(j).unwrap()] = Complex64::new(1.0, 0.0);
        s
    }

    #[test]
    fn gamma_values() {
        assert_eq!(dispersion(0.0), 0.0);
        assert_relative_eq!(dispersion(1.0), 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(dispersion(2.0), 20f64.sqrt(), max_relative = 1e-15);
        let g = FourierGrid::new(2.0 * PI, 16).unwrap();
        let table = gamma(&g);
        assert_eq!(table.values()[0].re, 0.0);
    }

    #[test]
    fn cache_invariants() {
        let g = FourierGrid::new(10.0, 256).unwrap();
        let p = Propagators::new(&g);
        let h = 0.013;
        let t = p.table(h);
        assert_eq!(t.sinc_table()[0], h);
        for i in 0..g.modes() {
            let gam = p.gamma()[i];
            assert!(gam >= 0.0);
            let c = t.cos_table()[i];
            let gs = gam * t.sinc_table()[i];
            assert!((c * c + gs * gs - 1.0).abs() <= 1e-12);
        }
        assert!(Arc::ptr_eq(&t, &p.table(h)));
    }

    #[test]
    fn vc_examples() {
        let g = FourierGrid::new(2.0 * PI, 16).unwrap();
        let f = single_mode(&g, 1);
        assert_eq!(apply_vc(0.0, &f), f);
        let out = apply_vc(PI / 2f64.sqrt(), &f);
        assert!((out.mode(1) - Complex64::new(-1.0, 0.0)).norm() <= 1e-15);
        let field = forward(&Field::from_fn(&g, |x| x.cos() + 0.3 * (3.0 * x).sin()).unwrap()).unwrap();
        for t in [0.1, 1.0, 7.3] {
            assert!(sobolev_norm(&apply_vc(t, &field), 1.0) <= sobolev_norm(&field, 1.0) * (1.0 + 1e-15));
        }
    }

    #[test]
    fn vs_examples() {
        let g = FourierGrid::new(2.0 * PI, 16).unwrap();
        let f = single_mode(&g, 1);
        assert_eq!(apply_vs(0.0, &f).max_abs(), 0.0);
        let dc = single_mode(&g, 0);
        assert_eq!(apply_vs(3.0, &dc).mode(0), Complex64::new(3.0, 0.0));
        let out = apply_vs(PI / (2.0 * 2f64.sqrt()), &f);
        assert_relative_eq!(out.mode(1).re, 1.0 / 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn sine_weight_series_is_continuous() {
        let g = 1.7;
        let t_edge = SINC_SERIES_CUTOFF / g;
        let below = sine_weight(t_edge * (1.0 - 1e-9), g);
        let above = sine_weight(t_edge * (1.0 + 1e-9), g);
        assert_relative_eq!(below, above, max_relative = 1e-8);
    }

    #[test]
    fn single_mode_closed_form() {
        let g = FourierGrid::new(2.0 * PI, 32).unwrap();
        let phi = forward(&Field::from_fn(&g, f64::cos).unwrap()).unwrap();
        let zero = Spectrum::zeros(&g);
        for t in [0.0, 0.5, 3.0, 11.0] {
            let (u, _) = free_evolution(t, &phi, &zero).unwrap();
            let expect =
                forward(&Field::from_fn(&g, |x| (2f64.sqrt() * t).cos() * x.cos()).unwrap()).unwrap();
            assert!(u.relative_distance(&expect) <= 1e-14, "t={t}");
        }
        let (u0, ut0) = free_evolution(0.0, &phi, &zero).unwrap();
        assert_eq!(u0, phi);
        assert_eq!(ut0, zero);
    }
}
