use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::gamma::EULER_GAMMA;
use crate::error::{Error, Result};

/// `B_{2k} / (2k)!` for k = 1..=15.
const BERNOULLI_OVER_FACTORIAL: [f64; 15] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
    -3617.0 / 510.0 / 20_922_789_888_000.0,
    43_867.0 / 798.0 / 6_402_373_705_728_000.0,
    -174_611.0 / 330.0 / 2_432_902_008_176_640_000.0,
    854_513.0 / 138.0 / 1.124_000_727_777_607_7e21,
    -236_364_091.0 / 2730.0 / 6.204_484_017_332_394e23,
    8_553_103.0 / 6.0 / 4.032_914_611_266_056_4e26,
    -23_749_461_029.0 / 870.0 / 3.048_883_446_117_138_4e29,
    8_615_841_276_005.0 / 14_322.0 / 2.652_528_598_121_910_6e32,
];

const POLE_RADIUS: f64 = 1e-10;

/// Truncation of the Euler-Maclaurin scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZetaConfig {
    /// Number of initial Dirichlet terms summed directly.
    pub terms: usize,
    /// Number of Bernoulli correction terms (at most 15).
    pub corrections: usize,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        Self {
            terms: 50,
            corrections: 15,
        }
    }
}

/// Riemann zeta with the default Euler-Maclaurin truncation.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    zeta_with(s, ZetaConfig::default())
}

pub fn zeta_with(s: Complex64, cfg: ZetaConfig) -> Result<Complex64> {
    zeta_and_derivative_with(s, cfg).map(|(z, _)| z)
}

/// `(zeta(s), zeta'(s))`, differentiating the Euler-Maclaurin formula term by term.
pub fn zeta_and_derivative(s: Complex64) -> Result<(Complex64, Complex64)> {
    zeta_and_derivative_with(s, ZetaConfig::default())
}

pub fn zeta_and_derivative_with(s: Complex64, cfg: ZetaConfig) -> Result<(Complex64, Complex64)> {
    let sm1 = s - 1.0;
    if sm1.norm() < POLE_RADIUS {
        return Err(Error::ZetaPole(sm1.norm()));
    }
    // The remainder behaves like (|s| / 2 pi N)^{2K}; keep N comfortably above |s| / 2.
    let n = cfg.terms.max((0.5 * s.norm()).ceil() as usize).max(2);
    let k_max = cfg.corrections.min(BERNOULLI_OVER_FACTORIAL.len());

    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for k in 1..n {
        let ln_k = (k as f64).ln();
        let term = (-s * ln_k).exp();
        value += term;
        deriv -= term * ln_k;
    }

    let nf = n as f64;
    let ln_n = nf.ln();
    let n_pow = (-s * ln_n).exp(); // N^{-s}
    let n_pow_1 = n_pow * nf; // N^{1-s}

    value += n_pow_1 / sm1 + 0.5 * n_pow;
    deriv += -ln_n * n_pow_1 / sm1 - n_pow_1 / (sm1 * sm1) - 0.5 * ln_n * n_pow;

    // T_k = c_k P_k(s) N^{-s-2k+1},  P_k = s (s+1) ... (s+2k-2)
    let mut poly = s;
    let mut poly_d = Complex64::new(1.0, 0.0);
    let mut n_factor = n_pow / nf; // N^{-s-1}
    for (k, &c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate().take(k_max) {
        value += c * poly * n_factor;
        deriv += c * (poly_d - ln_n * poly) * n_factor;
        let a = s + (2 * k + 1) as f64;
        let b = s + (2 * k + 2) as f64;
        poly_d = poly_d * a * b + poly * (a + b);
        poly = poly * a * b;
        n_factor /= nf * nf;
    }
    Ok((value, deriv))
}

/// `zeta_q(s) = (1 - q^{-s}) zeta(s)`.
pub fn zeta_q(s: Complex64, q: u64) -> Result<Complex64> {
    let local = Complex64::new(1.0, 0.0) - (-s * (q as f64).ln()).exp();
    Ok(local * zeta(s)?)
}

/// `zeta'(s) / zeta(s)` for real `s >= 1.5`.
pub fn zeta_log_deriv(s: f64) -> Result<f64> {
    if s < 1.5 {
        return Err(Error::InvalidArgument(format!(
            "zeta_log_deriv needs s >= 1.5, got {s}"
        )));
    }
    let (z, dz) = zeta_and_derivative(Complex64::new(s, 0.0))?;
    Ok(dz.re / z.re)
}

/// Constants that appear in every main term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaConstants {
    pub zeta2: f64,
    pub zeta4: f64,
    pub zeta2_logderiv: f64,
    pub zeta4_logderiv: f64,
    pub euler_gamma: f64,
}

impl ZetaConstants {
    pub fn get() -> &'static ZetaConstants {
        static CONSTANTS: OnceLock<ZetaConstants> = OnceLock::new();
        CONSTANTS.get_or_init(|| ZetaConstants {
            zeta2: PI * PI / 6.0,
            zeta4: PI.powi(4) / 90.0,
            zeta2_logderiv: zeta_log_deriv(2.0).expect("s = 2 is in range"),
            zeta4_logderiv: zeta_log_deriv(4.0).expect("s = 4 is in range"),
            euler_gamma: EULER_GAMMA,
        })
    }

    /// `6 zeta'(2)/zeta(2) - 4 zeta'(4)/zeta(4)`.
    pub fn log_deriv_combination(&self) -> f64 {
        6.0 * self.zeta2_logderiv - 4.0 * self.zeta4_logderiv
    }

    /// `zeta(2)^3 / zeta(4)`.
    pub fn cube_ratio(&self) -> f64 {
        self.zeta2.powi(3) / self.zeta4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn even_values() {
        assert!((zeta(c(2.0, 0.0)).unwrap().re - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta(c(4.0, 0.0)).unwrap().re - PI.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta(c(-1.0, 0.0)).unwrap().re + 1.0 / 12.0).abs() < 1e-12);
        assert!((zeta(c(0.0, 0.0)).unwrap().re + 0.5).abs() < 1e-13);
    }

    #[test]
    fn zeta_q_definition() {
        let z2 = PI * PI / 6.0;
        let v = zeta_q(c(2.0, 0.0), 11).unwrap();
        assert!((v.re - (1.0 - 1.0 / 121.0) * z2).abs() < 1e-14);
        let ratio = zeta_q(c(2.0, 0.0), 101).unwrap() / zeta(c(2.0, 0.0)).unwrap();
        assert!((ratio.re - (1.0 - 1.0 / 10201.0)).abs() < 1e-15);
        let s = c(1.0, 2.0);
        let direct = (c(1.0, 0.0) - (-s * 11f64.ln()).exp()) * zeta(s).unwrap();
        assert!((zeta_q(s, 11).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn pole_at_one() {
        assert!(matches!(zeta(c(1.0, 0.0)), Err(Error::ZetaPole(_))));
        assert!(zeta(c(1.0 + 1e-6, 0.0)).is_ok());
    }

    #[test]
    fn log_deriv_tail() {
        // -zeta'/zeta(30) ~ 2^{-30} log 2
        let v = zeta_log_deriv(30.0).unwrap();
        assert!(v < 0.0 && v.abs() < 1e-8);
        assert!(zeta_log_deriv(1.0).is_err());
    }

    #[test]
    fn constants_invariants() {
        let k = ZetaConstants::get();
        assert!((k.zeta2 - PI * PI / 6.0).abs() < 1e-12);
        assert!((k.zeta4 - PI.powi(4) / 90.0).abs() < 1e-12);
        assert!(k.zeta2_logderiv < 0.0 && k.zeta4_logderiv < 0.0);
        assert!(k.zeta4_logderiv.abs() < k.zeta2_logderiv.abs());
    }
}
