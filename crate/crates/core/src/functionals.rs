//! Conserved and almost-conserved quantities.
//!
//! ```text
//! E(u) = ½‖u‖²_{H¹} + ½‖(-Δ)^{-1/2} u_t‖²_{L²} + σ/(2k+2) ∫ u^{2k+2}
//! ```
//!
//! The potential integral is evaluated on a grid padded for degree `2k+2`,
//! so it is exact for the band-limited state. `E(Iu)` is the same functional
//! applied to `(m û, m û_t)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{Observer, SimState};
use crate::error::{Error, Result};
use crate::imethod::MultiplierSpec;
use crate::spectral::{
    sobolev_norm, sobolev_norm_linear_bracket, weighted_l2, FourierGrid, PowerWorkspace, DEFAULT_PADDED_CEILING,
};

/// Energy split into its three parts; `total = h1 + kinetic + potential`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub total: f64,
    /// `½‖u‖²_{H¹}`
    pub h1: f64,
    /// `½‖(-Δ)^{-1/2} u_t‖²`
    pub kinetic: f64,
    /// `σ/(2k+2) ∫ u^{2k+2}`
    pub potential: f64,
    /// `½‖u‖²_{H¹}` with the `1 + |ξ|` bracket.
    pub h1_linear_bracket: f64,
}

fn quadratic_parts(grid: &FourierGrid, u: &[Complex64], ut: &[Complex64]) -> (f64, f64, f64) {
    let (mut h1, mut kin, mut lin) = (0.0, 0.0, 0.0);
    for ((&x, a), b) in grid.xi().iter().zip(u).zip(ut) {
        let a2 = a.norm_sqr();
        h1 += (1.0 + x * x) * a2;
        let w = 1.0 + x.abs();
        lin += w * w * a2;
        if x != 0.0 {
            kin += b.norm_sqr() / (x * x);
        }
    }
    let l = grid.length();
    (0.5 * h1 / l, 0.5 * kin / l, 0.5 * lin / l)
}

/// Evaluates energies and commutator pairings with reusable padded buffers.
#[derive(Debug)]
pub struct EnergyEvaluator {
    grid: FourierGrid,
    k: u32,
    potential_ws: PowerWorkspace,
    pairing_ws: PowerWorkspace,
    iu: Vec<Complex64>,
    iut: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl EnergyEvaluator {
    pub fn new(grid: &FourierGrid, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("nonlinearity index k must be >= 1".into()));
        }
        let d = 2 * k as usize + 1;
        let zero = vec![Complex64::new(0.0, 0.0); grid.modes()];
        Ok(Self {
            grid: grid.clone(),
            k,
            potential_ws: PowerWorkspace::new(grid, d + 1, DEFAULT_PADDED_CEILING)?,
            pairing_ws: PowerWorkspace::new(grid, d, DEFAULT_PADDED_CEILING)?,
            iu: zero.clone(),
            iut: zero.clone(),
            a: zero.clone(),
            b: zero,
        })
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    fn check(&self, state: &SimState) -> Result<()> {
        self.grid.check_same(state.grid(), "energy")?;
        if state.model.nonlinear && state.model.k != self.k {
            return Err(Error::InvalidArgument(format!(
                "evaluator built for k = {} but state has k = {}",
                self.k, state.model.k
            )));
        }
        Ok(())
    }

    fn report(&mut self, t: f64, model_sign: f64, nonlinear: bool, which: Which) -> EnergyReport {
        let (u, ut) = match which {
            Which::Raw(u, ut) => (u, ut),
            Which::Smoothed => (&self.iu[..], &self.iut[..]),
        };
        let (h1, kinetic, h1_linear_bracket) = quadratic_parts(&self.grid, u, ut);
        let p = 2 * self.k + 2;
        let potential = if nonlinear {
            model_sign * self.potential_ws.integral_of_power(u, p) / p as f64
        } else {
            0.0
        };
        EnergyReport {
            t,
            total: h1 + kinetic + potential,
            h1,
            kinetic,
            potential,
            h1_linear_bracket,
        }
    }

    pub fn energy(&mut self, state: &SimState) -> Result<EnergyReport> {
        self.check(state)?;
        let u = state.u_hat.coeffs().to_vec();
        let ut = state.ut_hat.coeffs().to_vec();
        Ok(self.report(state.t, state.model.sign.factor(), state.model.nonlinear, Which::Raw(&u, &ut)))
    }

    fn load_smoothed(&mut self, state: &SimState, m: &MultiplierSpec) {
        for (i, &w) in m.values().iter().enumerate() {
            self.iu[i] = state.u_hat.coeffs()[i] * w;
            self.iut[i] = state.ut_hat.coeffs()[i] * w;
        }
    }

    /// `E(Iu)`; identical to [`Self::energy`] when `m ≡ 1`.
    pub fn modified_energy(&mut self, state: &SimState, m: &MultiplierSpec) -> Result<EnergyReport> {
        self.check(state)?;
        self.grid.check_same(m.grid(), "modified energy")?;
        if m.is_identity() {
            return self.energy(state);
        }
        self.load_smoothed(state, m);
        Ok(self.report(state.t, state.model.sign.factor(), state.model.nonlinear, Which::Smoothed))
    }

    /// `σ ⟨P((Iu)^{2k+1}) - m P(u^{2k+1}), I u_t⟩`, the exact time derivative
    /// of `E(Iu)` along the semi-discrete flow.
    pub fn commutator_pairing(&mut self, state: &SimState, m: &MultiplierSpec) -> Result<f64> {
        self.check(state)?;
        self.grid.check_same(m.grid(), "commutator pairing")?;
        if !state.model.nonlinear {
            return Ok(0.0);
        }
        self.load_smoothed(state, m);
        let d = 2 * self.k + 1;
        self.pairing_ws.power_into(&self.iu, d, &mut self.a);
        self.pairing_ws.power_into(state.u_hat.coeffs(), d, &mut self.b);
        let mut sum = 0.0;
        for i in 0..self.a.len() {
            let diff = self.a[i] - self.b[i] * m.values()[i];
            sum += (diff * self.iut[i].conj()).re;
        }
        Ok(state.model.sign.factor() * sum / self.grid.length())
    }

    /// `(∫ u^{2k+2})^{1/(2k+2)}`.
    pub fn potential_norm(&mut self, state: &SimState) -> Result<f64> {
        self.check(state)?;
        let p = 2 * self.k + 2;
        let integral = self.potential_ws.integral_of_power(state.u_hat.coeffs(), p);
        Ok(integral.max(0.0).powf(1.0 / p as f64))
    }
}

enum Which<'a> {
    Raw(&'a [Complex64], &'a [Complex64]),
    Smoothed,
}

pub fn energy(state: &SimState) -> Result<EnergyReport> {
    EnergyEvaluator::new(state.grid(), state.model.k)?.energy(state)
}

pub fn modified_energy(state: &SimState, m: &MultiplierSpec) -> Result<EnergyReport> {
    EnergyEvaluator::new(state.grid(), state.model.k)?.modified_energy(state, m)
}

pub fn commutator_pairing(state: &SimState, m: &MultiplierSpec) -> Result<f64> {
    EnergyEvaluator::new(state.grid(), state.model.k)?.commutator_pairing(state, m)
}

/// `‖(-Δ)^{-1/2} u_t‖_{H^{s-1}}`.
pub fn velocity_norm(state: &SimState, s: f64) -> f64 {
    weighted_l2(&state.ut_hat, |x| {
        if x == 0.0 {
            0.0
        } else {
            (1.0 + x * x).powf(s - 1.0) / (x * x)
        }
    })
}

/// One row of a norm time series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRow {
    pub t: f64,
    /// `‖u‖_{H^s}` for each requested `s`.
    pub hs: Vec<f64>,
    /// `‖u‖_{H^s}` with the `1 + |ξ|` bracket.
    pub hs_linear_bracket: Vec<f64>,
    /// `‖(-Δ)^{-1/2} u_t‖_{H^{s-1}}` for each requested `s`.
    pub velocity: Vec<f64>,
    pub energy: f64,
    /// `½‖u‖²_{H¹} + ½‖(-Δ)^{-1/2} u_t‖²`, conserved by the free flow.
    pub quadratic: f64,
    pub lp: f64,
    pub modified: Option<f64>,
}

/// Streams [`NormRow`]s while a trajectory is computed.
#[derive(Debug)]
pub struct NormObserver {
    s_list: Vec<f64>,
    m: Option<MultiplierSpec>,
    evaluator: EnergyEvaluator,
    pub rows: Vec<NormRow>,
}

impl NormObserver {
    pub fn new(grid: &FourierGrid, k: u32, s_list: &[f64], m: Option<MultiplierSpec>) -> Result<Self> {
        if let Some(m) = &m {
            grid.check_same(m.grid(), "norm observer")?;
        }
        Ok(Self {
            s_list: s_list.to_vec(),
            m,
            evaluator: EnergyEvaluator::new(grid, k)?,
            rows: Vec::new(),
        })
    }

    pub fn row(&mut self, state: &SimState) -> Result<NormRow> {
        let e = self.evaluator.energy(state)?;
        let modified = match &self.m {
            Some(m) => Some(self.evaluator.modified_energy(state, m)?.total),
            None => None,
        };
        Ok(NormRow {
            t: state.t,
            hs: self.s_list.iter().map(|&s| sobolev_norm(&state.u_hat, s)).collect(),
            hs_linear_bracket: self
                .s_list
                .iter()
                .map(|&s| sobolev_norm_linear_bracket(&state.u_hat, s))
                .collect(),
            velocity: self.s_list.iter().map(|&s| velocity_norm(state, s)).collect(),
            energy: e.total,
            quadratic: e.h1 + e.kinetic,
            lp: self.evaluator.potential_norm(state)?,
            modified,
        })
    }
}

impl Observer for NormObserver {
    fn observe(&mut self, state: &SimState) -> Result<()> {
        let row = self.row(state)?;
        self.rows.push(row);
        Ok(())
    }
}

/// Norm rows for every retained state of a trajectory.
pub fn norm_series(states: &[SimState], s_list: &[f64], m: Option<&MultiplierSpec>) -> Result<Vec<NormRow>> {
    let first = states
        .first()
        .ok_or_else(|| Error::Sampling("trajectory retained no states".into()))?;
    let mut obs = NormObserver::new(first.grid(), first.model.k, s_list, m.cloned())?;
    states.iter().map(|s| obs.row(s)).collect()
}
