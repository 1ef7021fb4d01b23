//! The smoothing kernel
//! `W_t(Y) = (1/2 pi i) int_{(sigma)} Y^{-u} Gamma(1+it+u)^2 e^{u^2} du/u`
//! evaluated by the trapezoidal rule on vertical lines, and the truncation
//! cutoffs derived from its decay.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::{gamma_unchecked, ln_gamma, ComplexValue};

/// Abscissa of the shifted contour, `-1 + epsilon` with `epsilon = 0.1`.
pub const SHIFTED_ABSCISSA: f64 = -0.9;

const MAX_REFINEMENTS: usize = 9;

/// Parameters of one kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Spectral shift `t`.
    pub t: f64,
    /// Target absolute error.
    pub tol: f64,
    /// Requested real part of the integration line.
    pub contour_abscissa: f64,
    /// Initial trapezoid step in the imaginary direction.
    pub quad_step: f64,
    /// The vertical line is truncated to `|Im u| <= quad_halfwidth`.
    pub quad_halfwidth: f64,
}

impl KernelParams {
    pub fn new(t: f64, tol: f64) -> Self {
        Self {
            t,
            tol,
            contour_abscissa: 2.0,
            quad_step: 0.05,
            quad_halfwidth: 8.0,
        }
    }

    pub fn with_abscissa(mut self, sigma: f64) -> Self {
        self.contour_abscissa = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return Err(Error::InvalidKernel(format!(
                "tol must lie in (0, 1e-4], got {}",
                self.tol
            )));
        }
        if !(self.quad_halfwidth >= 6.0) {
            return Err(Error::InvalidKernel(format!(
                "quad_halfwidth must be >= 6, got {}",
                self.quad_halfwidth
            )));
        }
        if !(self.quad_step > 0.0 && self.quad_step <= 1.0) {
            return Err(Error::InvalidKernel(format!(
                "quad_step must lie in (0, 1], got {}",
                self.quad_step
            )));
        }
        if !(self.contour_abscissa > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "contour_abscissa must be positive, got {}",
                self.contour_abscissa
            )));
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidKernel("t must be finite".into()));
        }
        Ok(())
    }
}

/// A kernel value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: ComplexValue,
    /// Real part of the line actually integrated over.
    pub abscissa: f64,
    /// Final trapezoid step.
    pub step: f64,
    /// Change produced by the last halving of the step.
    pub last_change: f64,
}

/// `Gamma(1 + it + u)^2 e^{u^2} / u`.
fn kernel_integrand(t: f64, u: Complex64) -> Complex64 {
    let g = gamma_unchecked(Complex64::new(1.0, t) + u);
    g * g * (u * u).exp() / u
}

/// Trapezoid sum over nodes `v = -H + k h`, `k = 0..=2H/h`, keeping only nodes
/// with `k % stride == offset` when refining.
fn trapezoid_line<F>(f: &F, sigma: f64, step: f64, halfwidth: f64, only_odd: bool) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let count = (2.0 * halfwidth / step).round() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut k = if only_odd { 1 } else { 0 };
    let stride = if only_odd { 2 } else { 1 };
    while k <= count {
        let v = -halfwidth + k as f64 * step;
        let w = if !only_odd && (k == 0 || k == count) {
            0.5
        } else {
            1.0
        };
        acc += w * f(Complex64::new(sigma, v));
        k += stride;
    }
    acc
}

/// `(1/2 pi) int f(sigma + iv) dv` with step halving until the change drops below `tol / 10`.
pub(crate) fn integrate_vertical<F>(
    f: F,
    sigma: f64,
    step: f64,
    halfwidth: f64,
    tol: f64,
) -> Result<(Complex64, f64, f64)>
where
    F: Fn(Complex64) -> Complex64,
{
    // Keep the node count per unit length an integer so halving nests the grids.
    let mut h = 2.0 * halfwidth / (2.0 * halfwidth / step).round();
    let mut sum = trapezoid_line(&f, sigma, h, halfwidth, false);
    let mut value = sum * h / (2.0 * PI);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        h *= 0.5;
        sum += trapezoid_line(&f, sigma, h, halfwidth, true);
        let refined = sum * h / (2.0 * PI);
        change = (refined - value).norm();
        value = refined;
        if change < tol / 10.0 {
            return Ok((value, h, change));
        }
    }
    if change <= tol {
        return Ok((value, h, change));
    }
    Err(Error::Nonconvergence { change, tol })
}

/// Largest usable abscissa not exceeding `requested`.
///
/// For `Y < 1` the factor `Y^{-sigma}` makes the integrand huge while the integral
/// stays of size one; the line is moved left (no poles lie in `Re u > 0`) until the
/// peak magnitude leaves enough double-precision headroom for `tol`.
pub fn effective_abscissa(y: f64, requested: f64, tol: f64) -> f64 {
    let budget = (1e-2 * tol / f64::EPSILON).max(10.0).ln();
    let log_peak = |sigma: f64| {
        let lg = ln_gamma(Complex64::new(1.0 + sigma, 0.0))
            .map(|z| z.re)
            .unwrap_or(f64::INFINITY);
        -sigma * y.ln() + 2.0 * lg + sigma * sigma - sigma.ln()
    };
    if log_peak(requested) <= budget {
        return requested;
    }
    let mut best = (requested, log_peak(requested));
    let mut sigma = requested;
    while sigma > 0.06 {
        sigma -= 0.05;
        let m = log_peak(sigma);
        if m <= budget {
            return sigma;
        }
        if m < best.1 {
            best = (sigma, m);
        }
    }
    best.0
}

/// `W_t(Y)` on the line `Re u = contour_abscissa` (moved left when `Y` is small).
pub fn wt_eval(params: &KernelParams, y: f64) -> Result<ComplexValue> {
    wt_eval_detailed(params, y).map(|k| k.value)
}

pub fn wt_eval_detailed(params: &KernelParams, y: f64) -> Result<KernelValue> {
    params.validate()?;
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "W_t(Y) needs Y > 0, got {y}"
        )));
    }
    let sigma = effective_abscissa(y, params.contour_abscissa, params.tol);
    let ln_y = y.ln();
    let t = params.t;
    let (value, step, last_change) = integrate_vertical(
        |u| (-u * ln_y).exp() * kernel_integrand(t, u),
        sigma,
        params.quad_step,
        params.quad_halfwidth,
        params.tol,
    )?;
    Ok(KernelValue {
        value,
        abscissa: sigma,
        step,
        last_change,
    })
}

/// `W_t(Y)` for `0 < Y <= 1` as the residue `Gamma(1+it)^2` at `u = 0` plus the
/// integral over `Re u = -0.9`.
pub fn wt_eval_shifted(params: &KernelParams, y: f64) -> Result<ComplexValue> {
    wt_shifted_parts(params, y).map(|(residue, rest)| residue + rest)
}

/// `(Gamma(1+it)^2, remainder integral)` of the shifted-contour representation.
pub fn wt_shifted_parts(params: &KernelParams, y: f64) -> Result<(ComplexValue, ComplexValue)> {
    params.validate()?;
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "shifted kernel needs 0 < Y <= 1, got {y}"
        )));
    }
    let t = params.t;
    let g = gamma_unchecked(Complex64::new(1.0, t));
    let ln_y = y.ln();
    let (rest, _, _) = integrate_vertical(
        |u| (-u * ln_y).exp() * kernel_integrand(t, u),
        SHIFTED_ABSCISSA,
        params.quad_step,
        params.quad_halfwidth,
        params.tol,
    )?;
    Ok((g * g, rest))
}

/// Precomputed trapezoid nodes for evaluating `W_t(Y)` at many `Y >= 1`.
///
/// `W_t(Y) = sum_k w_k Y^{-u_k}`; the step is validated by halving at the
/// extreme arguments the grid will serve.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    t: f64,
    sigma: f64,
    v0: f64,
    step: f64,
    weights: Vec<Complex64>,
}

impl KernelGrid {
    /// Build a grid valid for `Y` in `[y_min, y_max]`, `y_min >= 1`.
    pub fn new(params: &KernelParams, y_min: f64, y_max: f64) -> Result<Self> {
        params.validate()?;
        if !(y_min >= 1.0 && y_max >= y_min) {
            return Err(Error::InvalidArgument(format!(
                "kernel grid needs 1 <= y_min <= y_max, got [{y_min}, {y_max}]"
            )));
        }
        let sigma = params.contour_abscissa;
        let mut step = params.quad_step;
        for &y in &[y_min, y_max.sqrt() * y_min.sqrt(), y_max] {
            let p = KernelParams {
                quad_step: step,
                ..*params
            };
            let k = wt_eval_detailed(&p, y)?;
            // The refinement halves once beyond the accepted step.
            step = step.min(2.0 * k.step);
        }
        let h = 2.0 * params.quad_halfwidth / (2.0 * params.quad_halfwidth / step).round();
        let count = (2.0 * params.quad_halfwidth / h).round() as usize;
        let t = params.t;
        let weights = (0..=count)
            .map(|k| {
                let v = -params.quad_halfwidth + k as f64 * h;
                let w = if k == 0 || k == count { 0.5 } else { 1.0 };
                w * h / (2.0 * PI) * kernel_integrand(t, Complex64::new(sigma, v))
            })
            .collect();
        Ok(Self {
            t,
            sigma,
            v0: -params.quad_halfwidth,
            step: h,
            weights,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn eval(&self, y: f64) -> ComplexValue {
        let ln_y = y.ln();
        // Y^{-sigma - iv}, advanced geometrically along the nodes.
        let mut phase = Complex64::from_polar((-self.sigma * ln_y).exp(), -self.v0 * ln_y);
        let rot = Complex64::from_polar(1.0, -self.step * ln_y);
        let mut acc = Complex64::new(0.0, 0.0);
        for w in &self.weights {
            acc += w * phase;
            phase *= rot;
        }
        acc
    }
}

/// t-uniform upper bound for `|W_t(Y)|`:
/// `min_sigma Y^{-sigma} Gamma(1+sigma)^2 e^{sigma^2} / (2 sqrt(pi) sigma)`.
pub fn kernel_majorant(y: f64) -> f64 {
    let ln_y = y.ln();
    let mut best = f64::INFINITY;
    for i in 1..=400 {
        let sigma = 0.05 * i as f64;
        let lg = ln_gamma(Complex64::new(1.0 + sigma, 0.0))
            .map(|z| z.re)
            .unwrap_or(f64::INFINITY);
        let log_b = -sigma * ln_y + 2.0 * lg + sigma * sigma - (2.0 * PI.sqrt() * sigma).ln();
        best = best.min(log_b);
    }
    best.exp()
}

/// Smallest `Y` (on a 5% geometric grid) with `kernel_majorant(Y) <= tol / 10`.
pub fn decay_threshold(tol: f64) -> f64 {
    let target = tol / 10.0;
    let mut y = 1.0f64;
    while kernel_majorant(y) > target {
        y *= 1.05;
    }
    y
}

/// Cutoff `N` for sums whose terms carry `W_t(4 pi^2 n / (q * scale))`.
///
/// `N` is the power of two at or above `q * scale * Y*(tol) / 4 pi^2`, where
/// `Y*(tol)` is the [`decay_threshold`].
pub fn truncation_cutoff(q: u64, scale: u64, tol: f64) -> u64 {
    let y_star = decay_threshold(tol);
    let raw = (q as f64 * scale as f64 * y_star / (4.0 * PI * PI))
        .ceil()
        .max(1.0) as u64;
    raw.next_power_of_two()
}
