//! Time integration of `u_tt - u_xx + u_xxxx - (|u|^{2k} u)_xx = 0` as the
//! first-order system
//!
//! ```text
//! d/dt û   = û_t
//! d/dt û_t = -γ² û - σ ξ² (u^{2k+1})^
//! ```
//!
//! with `σ = +1` for the defocusing equation. The linear part is advanced
//! exactly by the propagator tables; the forcing is integrated either by
//! the fourth-order interaction-picture Runge-Kutta scheme or by Strang
//! splitting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagators::{PropagatorCache, Propagators};
use crate::spectral::{
    forward, FourierGrid, Field, PowerWorkspace, Spectrum, SymbolTable, DEFAULT_PADDED_CEILING,
};
use std::sync::Arc;

/// Mean of ψ tolerated as round-off, relative to `max(1, ‖ψ‖_∞)`.
pub const PSI_MEAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Defocusing,
    Focusing,
}

impl Sign {
    /// Coefficient of the potential term in the energy.
    pub fn factor(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    /// Nonlinearity power: the forcing is `(|u|^{2k} u)_xx`.
    pub k: u32,
    pub sign: Sign,
    /// When false the forcing is dropped and the flow is the free one.
    pub nonlinear: bool,
}

impl Model {
    pub fn defocusing(k: u32) -> Self {
        Self {
            k,
            sign: Sign::Defocusing,
            nonlinear: true,
        }
    }

    pub fn linear() -> Self {
        Self {
            k: 1,
            sign: Sign::Defocusing,
            nonlinear: false,
        }
    }

    pub fn degree(&self) -> u32 {
        2 * self.k + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("nonlinearity power k must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(û, û_t)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u_hat: Spectrum,
    pub ut_hat: Spectrum,
    pub model: Model,
}

impl SimState {
    /// Initial state for data `u(0) = φ`, `u_t(0) = ψ_x`. The unpaired
    /// Nyquist modes are dropped.
    pub fn from_data(phi: &Field, psi: &Field, model: Model) -> Result<Self> {
        model.validate()?;
        phi.grid().check_same(psi.grid(), "initial data")?;
        let scale = psi.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let mean = psi.mean();
        if mean.abs() > PSI_MEAN_TOL * scale {
            return Err(Error::NonzeroMean { mean });
        }
        let grid = phi.grid().clone();
        let mut u_hat = forward(phi)?;
        u_hat.drop_nyquist();
        let mut psi_hat = forward(psi)?;
        psi_hat.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        let ut_hat = crate::spectral::apply_multiplier(&psi_hat, &SymbolTable::derivative(&grid))?;
        Ok(Self {
            t: 0.0,
            u_hat,
            ut_hat,
            model,
        })
    }

    pub fn from_spectra(u_hat: Spectrum, ut_hat: Spectrum, model: Model) -> Result<Self> {
        model.validate()?;
        u_hat.grid().check_same(ut_hat.grid(), "state")?;
        Ok(Self {
            t: 0.0,
            u_hat,
            ut_hat,
            model,
        })
    }

    pub fn grid(&self) -> &FourierGrid {
        self.u_hat.grid()
    }

    /// Spatial mean of `u`.
    pub fn mean(&self) -> f64 {
        self.u_hat.coeffs()[0].re / self.grid().length()
    }

    pub fn is_finite(&self) -> bool {
        self.u_hat.is_finite() && self.ut_hat.is_finite()
    }

    pub fn u_field(&self) -> Result<Field> {
        crate::spectral::inverse(&self.u_hat)
    }

    pub fn ut_field(&self) -> Result<Field> {
        crate::spectral::inverse(&self.ut_hat)
    }

    /// Checks the structural invariants of a real solution.
    pub fn check_invariants(&self, initial_mean: f64) -> Result<()> {
        let t = self.t;
        if self.ut_hat.coeffs()[0] != Complex64::new(0.0, 0.0) {
            return Err(Error::Invariant {
                t,
                what: format!("mean of u_t is {:e}", self.ut_hat.coeffs()[0].re),
            });
        }
        let drift = (self.mean() - initial_mean).abs();
        if drift > 1e-10 * initial_mean.abs().max(1.0) {
            return Err(Error::Invariant {
                t,
                what: format!("mean of u drifted by {drift:e}"),
            });
        }
        for (name, s) in [("u", &self.u_hat), ("u_t", &self.ut_hat)] {
            let r = s.hermitian_residue();
            if r > 1e-12 {
                return Err(Error::Invariant {
                    t,
                    what: format!("{name} lost Hermitian symmetry ({r:e})"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Interaction-picture fourth-order Runge-Kutta.
    #[default]
    ExpRk4,
    /// Second-order Strang splitting (linear half step, exact forcing kick).
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub padded_ceiling: usize,
}

impl StepperConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            scheme: Scheme::ExpRk4,
            padded_ceiling: DEFAULT_PADDED_CEILING,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Dealiased spectrum of `u^{2k+1}` (no derivative factor).
pub fn nonlinearity(u_hat: &Spectrum, k: u32) -> Result<Spectrum> {
    let degree = 2 * k + 1;
    let mut ws = PowerWorkspace::new(u_hat.grid(), degree as usize, DEFAULT_PADDED_CEILING)?;
    let mut out = Spectrum::zeros(u_hat.grid());
    ws.power_into(u_hat.coeffs(), degree, out.coeffs_mut());
    Ok(out)
}

/// Reusable integrator for one grid, model and step size.
pub struct Stepper {
    grid: FourierGrid,
    model: Model,
    cfg: StepperConfig,
    props: Propagators,
    ws: Option<PowerWorkspace>,
    /// `-σ ξ²`
    forcing_symbol: Vec<f64>,
    bufs: [Vec<Complex64>; 8],
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("grid_modes", &self.grid.modes())
            .field("model", &self.model)
            .field("cfg", &self.cfg)
            .finish()
    }
}

impl Stepper {
    pub fn new(grid: &FourierGrid, model: Model, cfg: StepperConfig) -> Result<Self> {
        model.validate()?;
        cfg.validate()?;
        let ws = if model.nonlinear {
            Some(PowerWorkspace::new(grid, model.degree() as usize, cfg.padded_ceiling)?)
        } else {
            None
        };
        let sigma = model.sign.factor();
        let forcing_symbol = grid.xi().iter().map(|&x| -sigma * x * x).collect();
        let m = grid.modes();
        let zero = || vec![Complex64::new(0.0, 0.0); m];
        Ok(Self {
            grid: grid.clone(),
            model,
            cfg,
            props: Propagators::new(grid),
            ws,
            forcing_symbol,
            bufs: [zero(), zero(), zero(), zero(), zero(), zero(), zero(), zero()],
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn propagators(&self) -> &Propagators {
        &self.props
    }

    /// `-σ ξ² P(u^{2k+1})` into `out`.
    fn forcing(
        ws: &mut Option<PowerWorkspace>,
        symbol: &[f64],
        degree: u32,
        u: &[Complex64],
        out: &mut [Complex64],
    ) {
        match ws {
            Some(ws) => {
                ws.power_into(u, degree, out);
                for (o, &s) in out.iter_mut().zip(symbol) {
                    *o *= s;
                }
            }
            None => out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0)),
        }
    }

    /// Advances by the configured step.
    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        self.step_by(state, self.cfg.dt)
    }

    /// Advances by `h`. On a non-finite result the state is left untouched.
    pub fn step_by(&mut self, state: &mut SimState, h: f64) -> Result<()> {
        self.grid.check_same(state.grid(), "step")?;
        let half = self.props.table(0.5 * h);
        let mut u = state.u_hat.coeffs().to_vec();
        let mut v = state.ut_hat.coeffs().to_vec();
        match self.cfg.scheme {
            Scheme::ExpRk4 => self.rk4ip(&half, h, &mut u, &mut v),
            Scheme::Strang => self.strang(&half, h, &mut u, &mut v),
        }
        let finite = u.iter().chain(&v).all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite {
            return Err(Error::BlowUp {
                t: state.t + h,
                last_good_t: state.t,
            });
        }
        state.u_hat.coeffs_mut().copy_from_slice(&u);
        state.ut_hat.coeffs_mut().copy_from_slice(&v);
        state.t += h;
        Ok(())
    }

    fn strang(&mut self, half: &PropagatorCache, h: f64, u: &mut [Complex64], v: &mut [Complex64]) {
        half.advance(u, v);
        let degree = self.model.degree();
        let [f, ..] = &mut self.bufs;
        Self::forcing(&mut self.ws, &self.forcing_symbol, degree, u, f);
        for (vi, fi) in v.iter_mut().zip(f.iter()) {
            *vi += fi * h;
        }
        half.advance(u, v);
    }

    fn rk4ip(&mut self, half: &PropagatorCache, h: f64, u: &mut [Complex64], v: &mut [Complex64]) {
        let degree = self.model.degree();
        let m = u.len();
        let [au, av, k1u, k1v, wu, wv, acc_u, acc_v] = &mut self.bufs;

        // a = P w
        au.copy_from_slice(u);
        av.copy_from_slice(v);
        half.advance(au, av);

        // k1 = P (0, F(u))
        k1u.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        Self::forcing(&mut self.ws, &self.forcing_symbol, degree, u, k1v);
        half.advance(k1u, k1v);

        // accumulator for a + h/6 k1 + h/3 k2 + h/3 k3
        for i in 0..m {
            acc_u[i] = au[i] + k1u[i] * (h / 6.0);
            acc_v[i] = av[i] + k1v[i] * (h / 6.0);
        }

        // k2 = (0, F(a_u + h/2 k1_u))
        for i in 0..m {
            wu[i] = au[i] + k1u[i] * (0.5 * h);
        }
        Self::forcing(&mut self.ws, &self.forcing_symbol, degree, wu, wv);
        // wv holds k2_v; k2_u = 0
        for i in 0..m {
            acc_v[i] += wv[i] * (h / 3.0);
        }

        // k3 = (0, F(a_u)) since k2_u = 0
        Self::forcing(&mut self.ws, &self.forcing_symbol, degree, au, k1v);
        for i in 0..m {
            acc_v[i] += k1v[i] * (h / 3.0);
        }

        // k4 = (0, F(P(a + h k3))_u)
        for i in 0..m {
            wu[i] = au[i];
            wv[i] = av[i] + k1v[i] * h;
        }
        half.advance(wu, wv);
        let k4v = k1u; // reuse storage
        Self::forcing(&mut self.ws, &self.forcing_symbol, degree, wu, k4v);

        half.advance(acc_u, acc_v);
        for i in 0..m {
            u[i] = acc_u[i];
            v[i] = acc_v[i] + k4v[i] * (h / 6.0);
        }
    }
}

/// One step of size `cfg.dt` from `state`.
pub fn step(state: &SimState, cfg: &StepperConfig) -> Result<SimState> {
    let mut stepper = Stepper::new(state.grid(), state.model, *cfg)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// Receives sampled states during [`evolve`].
pub trait Observer {
    fn observe(&mut self, state: &SimState) -> Result<()>;
}

impl<F: FnMut(&SimState) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &SimState) -> Result<()> {
        self(state)
    }
}

/// Which states are handed to observers and retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    /// Observers run every `stride` steps, plus at the final time.
    pub stride: usize,
    /// Retain sampled states in the trajectory.
    pub keep_states: bool,
}

impl Sampling {
    pub fn every(stride: usize) -> Self {
        Self {
            stride: stride.max(1),
            keep_states: false,
        }
    }

    pub fn keeping(stride: usize) -> Self {
        Self {
            stride: stride.max(1),
            keep_states: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowUp {
    pub t: f64,
    pub last_good_t: f64,
}

/// Result of [`evolve`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: SimState,
    /// Times at which observers ran.
    pub times: Vec<f64>,
    /// Sampled states, if retained.
    pub states: Vec<SimState>,
    /// Last good state.
    pub final_state: SimState,
    pub steps: usize,
    pub blow_up: Option<BlowUp>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.blow_up.is_none()
    }
}

/// Integrates from data `(φ, ψ)` to time `t_end`.
pub fn evolve(
    phi: &Field,
    psi: &Field,
    t_end: f64,
    cfg: &StepperConfig,
    model: Model,
    sampling: Sampling,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let initial = SimState::from_data(phi, psi, model)?;
    evolve_state(initial, t_end, cfg, sampling, observers)
}

/// As [`evolve`], from an explicit initial state at its own time.
pub fn evolve_state(
    initial: SimState,
    t_end: f64,
    cfg: &StepperConfig,
    sampling: Sampling,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    cfg.validate()?;
    let duration = t_end - initial.t;
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "final time {t_end} precedes the initial time {}",
            initial.t
        )));
    }
    let mut stepper = Stepper::new(initial.grid(), initial.model, *cfg)?;
    let t0 = initial.t;
    let mean0 = initial.mean();
    let dt = cfg.dt;
    let mut full_steps = (duration / dt).floor() as usize;
    let mut remainder = duration - full_steps as f64 * dt;
    // absorb round-off so that T = n dt takes exactly n steps
    if remainder <= 1e-9 * dt {
        remainder = 0.0;
    } else if dt - remainder <= 1e-9 * dt {
        full_steps += 1;
        remainder = 0.0;
    }
    let total_steps = full_steps + usize::from(remainder > 0.0);

    let mut traj = Trajectory {
        initial: initial.clone(),
        times: Vec::new(),
        states: Vec::new(),
        final_state: initial.clone(),
        steps: 0,
        blow_up: None,
    };
    let record = |state: &SimState, traj: &mut Trajectory, observers: &mut [&mut dyn Observer]| {
        state.check_invariants(mean0)?;
        for obs in observers.iter_mut() {
            obs.observe(state)?;
        }
        traj.times.push(state.t);
        if sampling.keep_states {
            traj.states.push(state.clone());
        }
        Ok::<(), Error>(())
    };

    let mut state = initial;
    record(&state, &mut traj, observers)?;
    if !state.model.nonlinear {
        // free flow: evaluate from the data at every sample
        let (u0, v0) = (state.u_hat.clone(), state.ut_hat.clone());
        for i in 1..=total_steps {
            traj.steps = i;
            if i % sampling.stride == 0 || i == total_steps {
                state.t = if i <= full_steps { t0 + i as f64 * dt } else { t_end };
                let (u, v) = stepper.props.free_evolution(state.t - t0, &u0, &v0)?;
                state.u_hat = u;
                state.ut_hat = v;
                record(&state, &mut traj, observers)?;
            }
        }
        traj.final_state = state;
        return Ok(traj);
    }
    for i in 1..=total_steps {
        let result = if i <= full_steps {
            stepper.step(&mut state).map(|_| {
                state.t = t0 + i as f64 * dt;
            })
        } else {
            stepper.step_by(&mut state, remainder).map(|_| {
                state.t = t_end;
            })
        };
        if let Err(Error::BlowUp { t, last_good_t }) = result {
            traj.blow_up = Some(BlowUp { t, last_good_t });
            break;
        }
        result?;
        traj.steps = i;
        if i % sampling.stride == 0 || i == total_steps {
            record(&state, &mut traj, observers)?;
        }
    }
    traj.final_state = state;
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Trapezoid,
    Simpson,
}

/// Composite quadrature weights for `n` uniformly spaced samples.
pub fn quadrature_weights(n: usize, h: f64, rule: Quadrature) -> Result<Vec<f64>> {
    match rule {
        Quadrature::Trapezoid => {
            if n < 2 {
                return Err(Error::Sampling(format!("trapezoid rule needs 2 samples, got {n}")));
            }
            let mut w = vec![h; n];
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            Ok(w)
        }
        Quadrature::Simpson => {
            if n < 3 || n.is_multiple_of(2) {
                return Err(Error::Sampling(format!(
                    "Simpson's rule needs an odd number (>= 3) of samples, got {n}"
                )));
            }
            let mut w: Vec<f64> = (0..n)
                .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * h / 3.0)
                .collect();
            w[0] = h / 3.0;
            w[n - 1] = h / 3.0;
            Ok(w)
        }
    }
}

/// Uniform spacing of `times`, or an error if the samples are not uniform.
pub(crate) fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Sampling("fewer than two samples".into()));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (i, t) in times.iter().enumerate() {
        if (t - (times[0] + i as f64 * h)).abs() > 1e-9 * h.max(f64::MIN_POSITIVE) {
            return Err(Error::Sampling(format!("non-uniform sample at index {i} (t = {t})")));
        }
    }
    Ok(h)
}

/// Relative H¹ residual of the integral equation at the final sample:
/// `u(T) - V_c(T)φ - V_s(T)ψ_x - ∫_0^T V_s(T-t') (u^{2k+1})_xx dt'`, with
/// the integral evaluated by composite quadrature over the retained samples.
pub fn duhamel_residual(traj: &Trajectory, rule: Quadrature) -> Result<f64> {
    if traj.states.len() != traj.times.len() || traj.states.is_empty() {
        return Err(Error::Sampling("trajectory did not retain its samples".into()));
    }
    let h = uniform_spacing(&traj.times)?;
    let n = traj.states.len();
    let weights = quadrature_weights(n, h, rule)?;
    let first = &traj.states[0];
    let last = &traj.states[n - 1];
    let grid = first.grid().clone();
    let t_end = last.t;
    let t0 = first.t;
    let props = Propagators::new(&grid);
    let (free_u, _) = props.free_evolution(t_end - t0, &first.u_hat, &first.ut_hat)?;
    let mut rhs = free_u;

    let model = first.model;
    if model.nonlinear {
        let sigma = model.sign.factor();
        let mut ws = PowerWorkspace::new(&grid, model.degree() as usize, DEFAULT_PADDED_CEILING)?;
        let mut nl = vec![Complex64::new(0.0, 0.0); grid.modes()];
        let gamma = props.gamma();
        for (state, w) in traj.states.iter().zip(&weights) {
            ws.power_into(state.u_hat.coeffs(), model.degree(), &mut nl);
            let lag = t_end - state.t;
            for (i, c) in rhs.coeffs_mut().iter_mut().enumerate() {
                let x = grid.xi()[i];
                *c += nl[i] * (-sigma * x * x * crate::propagators::sine_weight(lag, gamma[i]) * w);
            }
        }
    }
    let diff = last.u_hat.axpy(-1.0, &rhs)?;
    let scale = crate::spectral::sobolev_norm(&last.u_hat, 1.0);
    let res = crate::spectral::sobolev_norm(&diff, 1.0);
    Ok(if scale > 0.0 { res / scale } else { res })
}

/// Shared handle type for observers that need the grid's propagators.
pub type SharedPropagators = Arc<Propagators>;
