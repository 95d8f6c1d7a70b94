//! Periodic Fourier discretization.
//!
//! The real line is replaced by a torus of length `L` sampled at `M`
//! points `x_n = -L/2 + n L/M`. Spectra use the continuum normalization
//!
//! ```text
//! f̂(ξ_j) = dx Σ_n f(x_n) e^{-i x_n ξ_j},     f(x_n) = (1/L) Σ_j f̂(ξ_j) e^{i x_n ξ_j}
//! ```
//!
//! so that discrete norms approximate their continuum counterparts without
//! rescaling: `‖f‖²_{L²} = (1/L) Σ_j |f̂(ξ_j)|²`.
//!
//! Coefficients are stored in FFT order: index `i < M/2` holds wavenumber
//! `2π i / L`, index `i ≥ M/2` holds `2π (i - M) / L`. The unpaired Nyquist
//! mode `-M/2` is kept by the plain transforms but is zeroed by every
//! dealiased product.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance of the Hermitian-symmetry contract.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Largest padded grid a dealiased product may allocate by default.
pub const DEFAULT_PADDED_CEILING: usize = 1 << 22;

#[derive(Debug)]
struct GridInner {
    length: f64,
    modes: usize,
    dx: f64,
    xi: Vec<f64>,
}

/// Uniform periodic grid. Cloning is cheap (shared wavenumber table).
#[derive(Debug, Clone)]
pub struct FourierGrid {
    inner: Arc<GridInner>,
}

impl PartialEq for FourierGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.modes == other.inner.modes
                && self.inner.length.to_bits() == other.inner.length.to_bits())
    }
}

impl FourierGrid {
    pub fn new(length: f64, modes: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if modes < 16 || !modes.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "mode count must be a power of two >= 16, got {modes}"
            )));
        }
        let xi = (0..modes)
            .map(|i| 2.0 * PI * signed(i, modes) as f64 / length)
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                length,
                modes,
                dx: length / modes as f64,
                xi,
            }),
        })
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn modes(&self) -> usize {
        self.inner.modes
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Wavenumbers in storage (FFT) order.
    pub fn xi(&self) -> &[f64] {
        &self.inner.xi
    }

    /// Wavenumbers sorted from `-M/2` to `M/2 - 1`.
    pub fn ordered_wavenumbers(&self) -> Vec<f64> {
        let m = self.modes() as i64;
        (-m / 2..m / 2)
            .map(|j| 2.0 * PI * j as f64 / self.length())
            .collect()
    }

    /// Collocation points `x_n = -L/2 + n dx`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.modes())
            .map(|n| -0.5 * self.length() + n as f64 * self.dx())
            .collect()
    }

    pub fn nyquist(&self) -> f64 {
        PI * self.modes() as f64 / self.length()
    }

    pub fn nyquist_index(&self) -> usize {
        self.modes() / 2
    }

    /// Signed mode number of storage index `i`.
    pub fn signed_index(&self, i: usize) -> i64 {
        signed(i, self.modes())
    }

    /// Storage index of signed mode `j`, if resolved.
    pub fn index_of(&self, j: i64) -> Option<usize> {
        let m = self.modes() as i64;
        if j < -m / 2 || j >= m / 2 {
            None
        } else {
            Some(j.rem_euclid(m) as usize)
        }
    }

    pub(crate) fn check_same(&self, other: &FourierGrid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: (L={}, M={}) vs (L={}, M={})",
                self.length(),
                self.modes(),
                other.length(),
                other.modes()
            )))
        }
    }
}

#[inline]
fn signed(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// Real samples `u(x_n)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: FourierGrid,
    pub(crate) values: Vec<f64>,
}

impl Field {
    pub fn new(grid: FourierGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.modes() {
            return Err(Error::InvalidArgument(format!(
                "field has {} samples, grid expects {}",
                values.len(),
                grid.modes()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "field", index });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &FourierGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.modes()],
        }
    }

    pub fn from_fn(grid: &FourierGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Continuum-normalized Fourier coefficients in storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: FourierGrid,
    pub(crate) coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: FourierGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.modes() {
            return Err(Error::InvalidArgument(format!(
                "spectrum has {} coefficients, grid expects {}",
                coeffs.len(),
                grid.modes()
            )));
        }
        if let Some(index) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { what: "spectrum", index });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: &FourierGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.modes()],
        }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of signed mode `j`, or zero if unresolved.
    pub fn mode(&self, j: i64) -> Complex64 {
        self.grid
            .index_of(j)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of `f̂(-ξ) = conj f̂(ξ)`, relative to the largest
    /// coefficient. Includes the imaginary parts of the self-paired zero
    /// and Nyquist modes.
    pub fn hermitian_residue(&self) -> f64 {
        let m = self.grid.modes();
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = self.coeffs[0].im.abs().max(self.coeffs[m / 2].im.abs());
        for i in 1..m / 2 {
            worst = worst.max((self.coeffs[m - i] - self.coeffs[i].conj()).norm());
        }
        worst / scale
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residue() <= HERMITIAN_TOL
    }

    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(&other.grid, "axpy")?;
        Ok(Spectrum {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * factor)
                .collect(),
        })
    }

    /// Zeroes the unpaired Nyquist mode.
    pub fn drop_nyquist(&mut self) {
        let k = self.grid.nyquist_index();
        self.coeffs[k] = Complex64::new(0.0, 0.0);
    }

    /// Largest coefficient difference relative to the larger of the two maxima.
    pub fn relative_distance(&self, other: &Spectrum) -> f64 {
        let scale = self.max_abs().max(other.max_abs());
        if scale == 0.0 {
            return 0.0;
        }
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Samples of a Fourier multiplier symbol `σ(ξ_j)` in storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    grid: FourierGrid,
    values: Vec<Complex64>,
}

impl SymbolTable {
    pub fn new(grid: FourierGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.modes() {
            return Err(Error::InvalidArgument(format!(
                "symbol table has {} entries, grid expects {}",
                values.len(),
                grid.modes()
            )));
        }
        if let Some(index) = values.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { what: "symbol", index });
        }
        Ok(Self { grid, values })
    }

    pub fn from_real_fn(grid: &FourierGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.xi().iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        Self::new(grid.clone(), values)
    }

    pub fn ones(grid: &FourierGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(1.0, 0.0); grid.modes()],
        }
    }

    /// `iξ`, with the Nyquist entry zeroed so real fields stay real.
    pub fn derivative(grid: &FourierGrid) -> Self {
        let mut values: Vec<Complex64> = grid.xi().iter().map(|&x| Complex64::new(0.0, x)).collect();
        values[grid.nyquist_index()] = Complex64::new(0.0, 0.0);
        Self { grid: grid.clone(), values }
    }

    /// `|ξ|^p`; for negative `p` the zero mode is defined as 0.
    pub fn abs_power(grid: &FourierGrid, p: f64) -> Self {
        let values = grid
            .xi()
            .iter()
            .map(|&x| {
                let v = if x == 0.0 {
                    if p > 0.0 {
                        0.0
                    } else if p == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    x.abs().powf(p)
                };
                Complex64::new(v, 0.0)
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    /// `⟨ξ⟩^s` with `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
    pub fn bracket_power(grid: &FourierGrid, s: f64) -> Self {
        let values = grid
            .xi()
            .iter()
            .map(|&x| Complex64::new(bracket(x).powf(s), 0.0))
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Pointwise product of two symbols.
    pub fn compose(&self, other: &SymbolTable) -> Result<SymbolTable> {
        self.grid.check_same(&other.grid, "compose")?;
        Ok(SymbolTable {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }
}

/// Quadratic Japanese bracket `(1 + ξ²)^{1/2}`.
#[inline]
pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

// ---------------------------------------------------------------------------
// FFT plan cache

type PlanKey = (usize, bool);
type ComplexCache = (FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>);

pub(crate) fn complex_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<ComplexCache>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, plans) = &mut *guard;
    plans
        .entry((n, inverse))
        .or_insert_with(|| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

type RealPlans = (Arc<dyn RealToComplex<f64>>, Arc<dyn ComplexToReal<f64>>);
type RealCache = (RealFftPlanner<f64>, HashMap<usize, RealPlans>);

fn real_plans(n: usize) -> RealPlans {
    static PLANS: OnceLock<Mutex<RealCache>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((RealFftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("real fft plan cache poisoned");
    let (planner, plans) = &mut *guard;
    plans
        .entry(n)
        .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
        .clone()
}

#[inline]
fn alternating(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Continuum-normalized forward transform of complex samples on a torus of
/// the given length (any sample count).
pub(crate) fn forward_raw(length: f64, samples: &mut [Complex64]) {
    let n = samples.len();
    complex_plan(n, false).process(samples);
    let dx = length / n as f64;
    for (i, c) in samples.iter_mut().enumerate() {
        *c *= dx * alternating(i);
    }
}

/// Inverse of [`forward_raw`].
pub(crate) fn inverse_raw(length: f64, coeffs: &mut [Complex64]) {
    let n = coeffs.len();
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c *= alternating(i) / length;
    }
    complex_plan(n, true).process(coeffs);
}

/// Physical samples to spectrum.
pub fn forward(f: &Field) -> Result<Spectrum> {
    if let Some(index) = f.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "field", index });
    }
    let m = f.values.len();
    let (r2c, _) = real_plans(m);
    let mut input = f.values.clone();
    let mut half = r2c.make_output_vec();
    r2c.process(&mut input, &mut half).expect("r2c sizes match the grid");
    let dx = f.grid.dx();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
    coeffs[0] = Complex64::new(half[0].re * dx, 0.0);
    for j in 1..m / 2 {
        let c = half[j] * (dx * alternating(j));
        coeffs[j] = c;
        coeffs[m - j] = c.conj();
    }
    coeffs[m / 2] = Complex64::new(half[m / 2].re * dx * alternating(m / 2), 0.0);
    Ok(Spectrum {
        grid: f.grid.clone(),
        coeffs,
    })
}

/// Spectrum to physical samples. Rejects spectra whose synthesis has an
/// imaginary part above [`HERMITIAN_TOL`] relative to the real part.
pub fn inverse(spec: &Spectrum) -> Result<Field> {
    if let Some(index) = spec.coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite { what: "spectrum", index });
    }
    let mut buf = spec.coeffs.clone();
    inverse_raw(spec.grid.length(), &mut buf);
    let re_max = buf.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let im_max = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let scale = re_max.max(im_max);
    if scale > 0.0 && im_max > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian {
            residue: im_max / scale,
            tolerance: HERMITIAN_TOL,
        });
    }
    Ok(Field {
        grid: spec.grid.clone(),
        values: buf.into_iter().map(|c| c.re).collect(),
    })
}

pub fn apply_multiplier(spec: &Spectrum, symbol: &SymbolTable) -> Result<Spectrum> {
    spec.grid.check_same(&symbol.grid, "apply_multiplier")?;
    Ok(Spectrum {
        grid: spec.grid.clone(),
        coeffs: spec.coeffs.iter().zip(&symbol.values).map(|(c, s)| c * s).collect(),
    })
}

/// `‖f‖_{H^s} = ((1/L) Σ ⟨ξ⟩^{2s} |f̂|²)^{1/2}`.
pub fn sobolev_norm(spec: &Spectrum, s: f64) -> f64 {
    weighted_l2(spec, |x| (1.0 + x * x).powf(s))
}

/// Same norm with the `1 + |ξ|` bracket.
pub fn sobolev_norm_linear_bracket(spec: &Spectrum, s: f64) -> f64 {
    weighted_l2(spec, |x| (1.0 + x.abs()).powf(2.0 * s))
}

/// `((1/L) Σ w(ξ_j) |f̂_j|²)^{1/2}` for a nonnegative weight.
pub fn weighted_l2(spec: &Spectrum, weight: impl Fn(f64) -> f64) -> f64 {
    let sum: f64 = spec
        .grid
        .xi()
        .iter()
        .zip(&spec.coeffs)
        .map(|(&x, c)| weight(x) * c.norm_sqr())
        .sum();
    (sum / spec.grid.length()).sqrt()
}

/// Real `L²(dx)` pairing `∫ f g dx` of two real functions given by spectra.
pub fn l2_pairing(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    a.grid.check_same(&b.grid, "l2_pairing")?;
    let sum: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x * y.conj()).re).sum();
    Ok(sum / a.grid.length())
}

/// `(Σ |f_n|^p dx)^{1/p}`, or `max |f_n|` for `p = ∞`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    lp_norm_samples(&f.values, f.grid.dx(), p)
}

pub(crate) fn lp_norm_samples(values: &[f64], dx: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((sum * dx).powf(1.0 / p))
}

/// Padded size for an exact product of `degree` band-limited factors.
pub fn padded_modes(modes: usize, degree: usize) -> usize {
    (degree + 1) * modes / 2
}

/// Copies a spectrum onto a padded coefficient array, splitting the Nyquist
/// coefficient evenly between `±M/2`.
fn pad_into(coeffs: &[Complex64], padded: &mut [Complex64]) {
    let m = coeffs.len();
    let mp = padded.len();
    padded.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
    padded[0] = coeffs[0];
    for j in 1..m / 2 {
        padded[j] = coeffs[j];
        padded[mp - j] = coeffs[m - j];
    }
    let half_nyq = coeffs[m / 2] * 0.5;
    padded[m / 2] = half_nyq;
    padded[mp - m / 2] = half_nyq;
}

/// Product of `factors` restricted to the resolved modes `|j| < M/2`.
/// `degree` must equal the number of factors.
pub fn dealias_product(factors: &[&Spectrum], degree: usize) -> Result<Spectrum> {
    dealias_product_with_ceiling(factors, degree, DEFAULT_PADDED_CEILING)
}

pub fn dealias_product_with_ceiling(
    factors: &[&Spectrum],
    degree: usize,
    ceiling: usize,
) -> Result<Spectrum> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidArgument("dealias_product needs at least one factor".into()))?;
    if degree != factors.len() {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} does not match {} factors",
            factors.len()
        )));
    }
    let grid = first.grid.clone();
    for f in factors {
        grid.check_same(&f.grid, "dealias_product")?;
    }
    let m = grid.modes();
    let mp = padded_modes(m, degree.max(1));
    if mp > ceiling {
        return Err(Error::ResourceLimit { requested: mp, ceiling });
    }
    let length = grid.length();
    let mut product = vec![Complex64::new(1.0, 0.0); mp];
    let mut buf = vec![Complex64::new(0.0, 0.0); mp];
    for f in factors {
        pad_into(&f.coeffs, &mut buf);
        inverse_raw(length, &mut buf);
        for (p, v) in product.iter_mut().zip(&buf) {
            *p *= v;
        }
    }
    forward_raw(length, &mut product);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
    coeffs[0] = product[0];
    for j in 1..m / 2 {
        coeffs[j] = product[j];
        coeffs[m - j] = product[mp - j];
    }
    Ok(Spectrum { grid, coeffs })
}

/// Reusable workspace for powers of a real field on a padded grid. Used on
/// the hot path of the integrator and the energy functionals.
pub struct PowerWorkspace {
    modes: usize,
    padded: usize,
    length: f64,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    half: Vec<Complex64>,
    real: Vec<f64>,
    scratch_r2c: Vec<Complex64>,
    scratch_c2r: Vec<Complex64>,
}

impl std::fmt::Debug for PowerWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PowerWorkspace")
            .field("modes", &self.modes)
            .field("padded", &self.padded)
            .finish()
    }
}

impl PowerWorkspace {
    /// Workspace exact for products of up to `degree` factors.
    pub fn new(grid: &FourierGrid, degree: usize, ceiling: usize) -> Result<Self> {
        let m = grid.modes();
        let mut padded = padded_modes(m, degree.max(1));
        if padded % 2 == 1 {
            padded += 1;
        }
        if padded > ceiling {
            return Err(Error::ResourceLimit { requested: padded, ceiling });
        }
        let (r2c, c2r) = real_plans(padded);
        let scratch_r2c = r2c.make_scratch_vec();
        let scratch_c2r = c2r.make_scratch_vec();
        Ok(Self {
            modes: m,
            padded,
            length: grid.length(),
            r2c,
            c2r,
            half: vec![Complex64::new(0.0, 0.0); padded / 2 + 1],
            real: vec![0.0; padded],
            scratch_r2c,
            scratch_c2r,
        })
    }

    pub fn padded_modes(&self) -> usize {
        self.padded
    }

    /// Fills `self.real` with samples of the (real) function on the padded grid.
    fn synthesize(&mut self, coeffs: &[Complex64]) {
        debug_assert_eq!(coeffs.len(), self.modes);
        let m = self.modes;
        let inv_l = 1.0 / self.length;
        self.half.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        self.half[0] = Complex64::new(coeffs[0].re * inv_l, 0.0);
        for j in 1..m / 2 {
            self.half[j] = coeffs[j] * (alternating(j) * inv_l);
        }
        // split Nyquist: the padded half-spectrum holds the +M/2 partner
        self.half[m / 2] = coeffs[m / 2].conj() * (0.5 * alternating(m / 2) * inv_l);
        self.c2r
            .process_with_scratch(&mut self.half, &mut self.real, &mut self.scratch_c2r)
            .expect("c2r sizes are fixed at construction");
    }

    /// Dealiased spectrum of `u^p` written into `out` (Nyquist zeroed).
    pub fn power_into(&mut self, coeffs: &[Complex64], p: u32, out: &mut [Complex64]) {
        self.synthesize(coeffs);
        for v in self.real.iter_mut() {
            *v = v.powi(p as i32);
        }
        self.analyze_into(out);
    }

    /// Truncates the spectrum of the padded samples into `out`.
    fn analyze_into(&mut self, out: &mut [Complex64]) {
        self.r2c
            .process_with_scratch(&mut self.real, &mut self.half, &mut self.scratch_r2c)
            .expect("r2c sizes are fixed at construction");
        let m = self.modes;
        let dxp = self.length / self.padded as f64;
        out[0] = Complex64::new(self.half[0].re * dxp, 0.0);
        for j in 1..m / 2 {
            let c = self.half[j] * (dxp * alternating(j));
            out[j] = c;
            out[m - j] = c.conj();
        }
        out[m / 2] = Complex64::new(0.0, 0.0);
    }

    /// `∫ u^p dx`, exact when `p` does not exceed the workspace degree.
    pub fn integral_of_power(&mut self, coeffs: &[Complex64], p: u32) -> f64 {
        self.synthesize(coeffs);
        let dxp = self.length / self.padded as f64;
        self.real.iter().map(|v| v.powi(p as i32)).sum::<f64>() * dxp
    }

    /// Samples of the function on the padded grid.
    pub fn samples(&mut self, coeffs: &[Complex64]) -> &[f64] {
        self.synthesize(coeffs);
        &self.real
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(l: f64, m: usize) -> FourierGrid {
        FourierGrid::new(l, m).unwrap()
    }

    fn random_field(g: &FourierGrid, seed: u64) -> Field {
        let rng = crate::rng::CounterRng::new(seed, 9);
        let values = (0..g.modes()).map(|i| rng.uniform(i as u64) - 0.5).collect();
        Field::new(g.clone(), values).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid(10.0, 64);
        let xi = g.ordered_wavenumbers();
        assert!(xi.windows(2).all(|w| w[1] > w[0]));
        assert_relative_eq!(xi[0].abs(), g.nyquist(), max_relative = 1e-15);
        assert_relative_eq!(g.dx(), 10.0 / 64.0);
        assert!(FourierGrid::new(1.0, 8).is_err());
        assert!(FourierGrid::new(1.0, 48).is_err());
        assert!(FourierGrid::new(0.0, 64).is_err());
        assert_eq!(g.index_of(-32), Some(32));
        assert_eq!(g.index_of(32), None);
        assert_eq!(g.signed_index(63), -1);
    }

    #[test]
    fn constant_field_has_only_dc() {
        let g = grid(2.0 * PI, 16);
        let f = Field::from_fn(&g, |_| 1.0).unwrap();
        let s = forward(&f).unwrap();
        assert_relative_eq!(s.coeffs[0].re, 2.0 * PI, max_relative = 1e-14);
        for c in &s.coeffs[1..] {
            assert!(c.norm() <= 1e-12);
        }
    }

    #[test]
    fn cosine_has_two_modes_of_weight_pi() {
        let g = grid(2.0 * PI, 16);
        let s = forward(&Field::from_fn(&g, f64::cos).unwrap()).unwrap();
        assert!((s.mode(1) - Complex64::new(PI, 0.0)).norm() <= 1e-12);
        assert!((s.mode(-1) - Complex64::new(PI, 0.0)).norm() <= 1e-12);
        for j in 2..8 {
            assert!(s.mode(j).norm() <= 1e-12 && s.mode(-j).norm() <= 1e-12);
        }
    }

    #[test]
    fn gaussian_matches_continuum_transform() {
        let g = grid(80.0, 1024);
        let s = forward(&Field::from_fn(&g, |x| (-0.5 * x * x).exp()).unwrap()).unwrap();
        for (&xi, c) in g.xi().iter().zip(s.coeffs()) {
            if xi.abs() <= 10.0 {
                let exact = (2.0 * PI).sqrt() * (-0.5 * xi * xi).exp();
                // relative where the exact value is above the FFT noise floor
                let err = (c - Complex64::new(exact, 0.0)).norm();
                assert!(err <= 1e-10 * exact.max(1e-4), "xi={xi} err={err} exact={exact}");
            }
        }
    }

    #[test]
    fn round_trip_and_zero() {
        let g = grid(7.0, 128);
        let f = random_field(&g, 1);
        let back = inverse(&forward(&f).unwrap()).unwrap();
        let err = f.values.iter().zip(&back.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = f.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-12 * scale);
        let z = inverse(&Spectrum::zeros(&g)).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn broken_symmetry_is_rejected() {
        let g = grid(2.0 * PI, 16);
        let mut s = Spectrum::zeros(&g);
        s.coeffs[1] = Complex64::new(1.0, 0.0);
        assert!(s.hermitian_residue() > 0.5);
        match inverse(&s) {
            Err(Error::NotHermitian { residue, .. }) => assert!(residue > 0.1),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_field_is_rejected() {
        let g = grid(1.0, 16);
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g.clone(), v), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn multiplier_examples() {
        let g = grid(2.0 * PI, 32);
        let cos = forward(&Field::from_fn(&g, f64::cos).unwrap()).unwrap();
        let id = apply_multiplier(&cos, &SymbolTable::ones(&g)).unwrap();
        assert_eq!(id, cos);

        let d = apply_multiplier(&cos, &SymbolTable::derivative(&g)).unwrap();
        let minus_sin = forward(&Field::from_fn(&g, |x| -x.sin()).unwrap()).unwrap();
        assert!(d.relative_distance(&minus_sin) <= 1e-13);

        let sin2 = forward(&Field::from_fn(&g, |x| (2.0 * x).sin()).unwrap()).unwrap();
        let inv = SymbolTable::abs_power(&g, -1.0);
        let twice = apply_multiplier(&apply_multiplier(&sin2, &inv).unwrap(), &inv).unwrap();
        let quarter = sin2.scaled(0.25);
        assert!(twice.relative_distance(&quarter) <= 1e-14);

        let other = grid(PI, 32);
        assert!(matches!(
            apply_multiplier(&cos, &SymbolTable::ones(&other)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn composition_of_multipliers_is_exact() {
        let g = grid(3.0, 64);
        let f = forward(&random_field(&g, 2)).unwrap();
        let a = SymbolTable::bracket_power(&g, 0.7);
        let b = SymbolTable::derivative(&g);
        let two_step = apply_multiplier(&apply_multiplier(&f, &a).unwrap(), &b).unwrap();
        let one_step = apply_multiplier(&f, &a.compose(&b).unwrap()).unwrap();
        assert!(two_step.relative_distance(&one_step) <= 1e-15);
    }

    #[test]
    fn sobolev_examples() {
        let g = grid(2.0 * PI, 32);
        assert_eq!(sobolev_norm(&Spectrum::zeros(&g), 1.0), 0.0);
        let cos = forward(&Field::from_fn(&g, f64::cos).unwrap()).unwrap();
        assert_relative_eq!(sobolev_norm(&cos, 0.0), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(sobolev_norm(&cos, 1.0), (2.0 * PI).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn lp_examples() {
        let g = grid(10.0, 16);
        let one = Field::from_fn(&g, |_| 1.0).unwrap();
        assert_relative_eq!(lp_norm(&one, 2.0).unwrap(), 10f64.sqrt(), max_relative = 1e-14);
        let g = grid(2.0 * PI, 64);
        let cos = Field::from_fn(&g, f64::cos).unwrap();
        assert_relative_eq!(
            lp_norm(&cos, 4.0).unwrap(),
            (3.0 * PI / 4.0).powf(0.25),
            max_relative = 1e-14
        );
        assert_relative_eq!(lp_norm(&cos, f64::INFINITY).unwrap(), 1.0);
        assert!(lp_norm(&cos, 0.5).is_err());
    }

    #[test]
    fn product_of_cosines() {
        let g = grid(2.0 * PI, 32);
        let cos = forward(&Field::from_fn(&g, f64::cos).unwrap()).unwrap();
        let sq = dealias_product(&[&cos, &cos], 2).unwrap();
        let expected = forward(&Field::from_fn(&g, |x| 0.5 + 0.5 * (2.0 * x).cos()).unwrap()).unwrap();
        assert!(sq.relative_distance(&expected) <= 1e-14);
        let zero = Spectrum::zeros(&g);
        let p = dealias_product(&[&cos, &zero, &cos], 3).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn dealias_errors() {
        let g = grid(1.0, 64);
        let z = Spectrum::zeros(&g);
        assert!(dealias_product(&[&z, &z], 3).is_err());
        assert!(matches!(
            dealias_product_with_ceiling(&[&z, &z, &z], 3, 100),
            Err(Error::ResourceLimit { requested: 128, ceiling: 100 })
        ));
    }

    #[test]
    fn workspace_power_matches_generic_product() {
        let g = grid(5.0, 64);
        let mut u = forward(&random_field(&g, 4)).unwrap();
        u.drop_nyquist();
        let generic = dealias_product(&[&u, &u, &u], 3).unwrap();
        let mut ws = PowerWorkspace::new(&g, 3, DEFAULT_PADDED_CEILING).unwrap();
        let mut out = vec![Complex64::new(0.0, 0.0); 64];
        ws.power_into(u.coeffs(), 3, &mut out);
        let fast = Spectrum::new(g.clone(), out).unwrap();
        assert!(fast.relative_distance(&generic) <= 1e-13);

        // ∫u^4 from the padded grid equals the pairing of u^3 with u
        let mut ws4 = PowerWorkspace::new(&g, 4, DEFAULT_PADDED_CEILING).unwrap();
        let direct = ws4.integral_of_power(u.coeffs(), 4);
        let paired = l2_pairing(&generic, &u).unwrap();
        assert_relative_eq!(direct, paired, max_relative = 1e-12);
    }
}
