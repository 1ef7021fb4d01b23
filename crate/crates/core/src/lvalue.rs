//! `L(1/2 + it, f)^2` through the approximate functional equation
//!
//! `L^2 = Gamma(1+it)^{-2} S(t) + Gamma(1+it)^{-2} (q / 4 pi^2)^{-2it} S'(t)` with
//! `S(t) = sum_{(d,q)=1} d^{-1-2it} sum_n tau(n) lambda(n) n^{-1/2-it} W_t(4 pi^2 n d^2 / q)`
//! and `S'(t)` the same sum with `t -> -t`, plus an independent central-value oracle.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::heckespace::{lambda_extend, sign_of_functional_equation, EigenformTable};
use crate::smoothing::{truncation_cutoff, wt_eval, KernelGrid, KernelParams};
use crate::special::{gamma, ComplexValue, FactorSieve};

/// Accuracy of every kernel value entering the sums.
pub const KERNEL_TOL: f64 = 1e-12;

/// Default target accuracy of L-values.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeResult {
    /// `L(1/2 + it, f)^2`.
    pub value: ComplexValue,
    /// The lattice `n d^2 <= n_cutoff` is summed.
    pub n_cutoff: u64,
    pub d_cutoff: u64,
    /// Change of `value` when the cutoff is halved, an estimate of the discarded tail.
    pub tail_bound: f64,
}

/// `W_t(4 pi^2 m / q)` for `m = 0..=n` (entry 0 unused).
pub fn kernel_table(q: u64, t: f64, n: u64) -> Result<Vec<Complex64>> {
    let params = KernelParams::new(t, KERNEL_TOL);
    let scale = 4.0 * PI * PI / q as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); n as usize + 1];
    let first_large = (1..=n).find(|&m| m as f64 * scale >= 1.0).unwrap_or(n + 1);
    for m in 1..first_large {
        out[m as usize] = wt_eval(&params, m as f64 * scale)?;
    }
    if first_large <= n {
        let grid = KernelGrid::new(&params, first_large as f64 * scale, n as f64 * scale)?;
        for m in first_large..=n {
            out[m as usize] = grid.eval(m as f64 * scale);
        }
    }
    Ok(out)
}

/// Form-independent weights of the approximate functional equation at one `(q, t)`.
///
/// `S(t) = sum_n lambda(n) K_t(n)` with
/// `K_t(n) = tau(n) n^{-1/2-it} sum_{d <= sqrt(N/n), (d,q)=1} d^{-1-2it} W_t(4 pi^2 n d^2 / q)`.
#[derive(Debug, Clone)]
pub struct AfeWeights {
    q: u64,
    t: f64,
    n_cutoff: u64,
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
    plus_half: Vec<Complex64>,
    minus_half: Vec<Complex64>,
    prefactor: Complex64,
    dual_prefactor: Complex64,
}

impl AfeWeights {
    /// Weights with the cutoff `truncation_cutoff(q, 1, tol)`.
    pub fn new(q: u64, t: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1e-4) {
            return Err(Error::InvalidArgument(format!(
                "tol must lie in (0, 1e-4], got {tol}"
            )));
        }
        Self::with_cutoff(q, t, truncation_cutoff(q, 1, tol))
    }

    pub fn with_cutoff(q: u64, t: f64, n_cutoff: u64) -> Result<Self> {
        let n = n_cutoff as usize;
        let sieve = FactorSieve::new(n);
        let tau = sieve.divisor_counts();
        let d_max = (n_cutoff as f64).sqrt().floor() as usize + 1;
        let build = |t: f64| -> Result<(Vec<Complex64>, Vec<Complex64>)> {
            let w = kernel_table(q, t, n_cutoff)?;
            let dpow: Vec<Complex64> = (0..=d_max)
                .map(|d| {
                    if d == 0 || (d as u64).is_multiple_of(q) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::from_polar(1.0 / d as f64, -2.0 * t * (d as f64).ln())
                    }
                })
                .collect();
            let mut full = vec![Complex64::new(0.0, 0.0); n + 1];
            let mut half = vec![Complex64::new(0.0, 0.0); n + 1];
            for m in 1..=n {
                let base = Complex64::from_polar(
                    f64::from(tau[m]) / (m as f64).sqrt(),
                    -t * (m as f64).ln(),
                );
                let mut acc = Complex64::new(0.0, 0.0);
                let mut acc_half = Complex64::new(0.0, 0.0);
                let mut d = 1;
                while m * d * d <= n {
                    let term = dpow[d] * w[m * d * d];
                    acc += term;
                    if 2 * m * d * d <= n {
                        acc_half += term;
                    }
                    d += 1;
                }
                full[m] = base * acc;
                half[m] = base * acc_half;
            }
            Ok((full, half))
        };
        let (plus, plus_half) = build(t)?;
        let (minus, minus_half) = build(-t)?;
        let g = gamma(Complex64::new(1.0, t))?;
        let prefactor = (g * g).inv();
        let dual_prefactor =
            prefactor * Complex64::from_polar(1.0, -2.0 * t * (q as f64 / (4.0 * PI * PI)).ln());
        Ok(Self {
            q,
            t,
            n_cutoff,
            plus,
            minus,
            plus_half,
            minus_half,
            prefactor,
            dual_prefactor,
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n_cutoff(&self) -> u64 {
        self.n_cutoff
    }

    /// The weights `K_t(n)` of the first sum.
    pub fn weights(&self) -> &[Complex64] {
        &self.plus
    }

    /// The weights `K_{-t}(n)` of the dual sum.
    pub fn dual_weights(&self) -> &[Complex64] {
        &self.minus
    }

    /// `Gamma(1+it)^{-2}`.
    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    /// `Gamma(1+it)^{-2} (q / 4 pi^2)^{-2it}`.
    pub fn dual_prefactor(&self) -> Complex64 {
        self.dual_prefactor
    }

    /// `L(1/2 + it, f)^2` for one form.
    pub fn evaluate(&self, table: &EigenformTable) -> Result<AfeResult> {
        if table.q != self.q {
            return Err(Error::InvalidArgument(format!(
                "table level {} differs from {}",
                table.q, self.q
            )));
        }
        if table.n_max < self.n_cutoff {
            return Err(Error::InsufficientTable {
                q: table.q,
                have: table.n_max,
                need: self.n_cutoff,
            });
        }
        let lam = &table.lambda;
        let dot = |w: &[Complex64]| -> Complex64 {
            w.iter().zip(lam.iter()).skip(1).map(|(k, l)| k * *l).sum()
        };
        let value = self.prefactor * dot(&self.plus) + self.dual_prefactor * dot(&self.minus);
        let half =
            self.prefactor * dot(&self.plus_half) + self.dual_prefactor * dot(&self.minus_half);
        Ok(AfeResult {
            value,
            n_cutoff: self.n_cutoff,
            d_cutoff: (self.n_cutoff as f64).sqrt().floor() as u64,
            tail_bound: (value - half).norm(),
        })
    }
}

/// `L(1/2 + it, f)^2` with the cutoff for `tol`.
pub fn l_squared_afe(table: &EigenformTable, t: f64, tol: f64) -> Result<AfeResult> {
    AfeWeights::new(table.q, t, tol)?.evaluate(table)
}

/// `L(1/2, f) = (1 + eps_f) sum_n lambda(n) n^{-1/2} exp(-2 pi n / sqrt(q))`, the completed
/// L-function split at its symmetry point.
pub fn l_central_oracle(table: &EigenformTable, tol: f64) -> Result<f64> {
    let sign = match table.sign {
        0 => sign_of_functional_equation(table)?,
        s => s,
    };
    if sign < 0 {
        return Ok(0.0);
    }
    let x = 2.0 * PI / (table.q as f64).sqrt();
    // Terms beyond n are below tol * 1e-3 (|lambda(n)| <= tau(n) <= 2 sqrt(n)).
    let n_stop = (((1.0 / tol).ln() + 15.0) / x).ceil() as u64;
    let extended;
    let lam = if table.n_max >= n_stop {
        &table.lambda
    } else {
        extended = lambda_extend(table, n_stop)?;
        &extended.lambda
    };
    let s: f64 = (1..=n_stop as usize)
        .map(|n| lam[n] * (-(n as f64) * x).exp() / (n as f64).sqrt())
        .sum();
    Ok(2.0 * s)
}
