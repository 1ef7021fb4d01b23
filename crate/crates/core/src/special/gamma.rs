use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

// Lanczos coefficients for g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const POLE_RADIUS: f64 = 1e-14;

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Complex Gamma function.
///
/// Lanczos approximation on `Re s >= 0.5`, reflection formula below that.
/// Relative accuracy is about 1e-14 on `|Im s| <= 50`, `Re s` in `[-20, 50]`.
pub fn gamma(s: Complex64) -> Result<Complex64> {
    check_pole(s)?;
    Ok(gamma_unchecked(s))
}

fn check_pole(s: Complex64) -> Result<()> {
    if s.re <= 0.5 && s.im.abs() < POLE_RADIUS {
        let k = s.re.round();
        if k <= 0.0 && (s.re - k).abs() < POLE_RADIUS {
            return Err(Error::GammaPole(k as i64));
        }
    }
    Ok(())
}

pub(crate) fn gamma_unchecked(s: Complex64) -> Complex64 {
    if s.re < 0.5 {
        // Gamma(s) Gamma(1-s) = pi / sin(pi s)
        let sin = (s * PI).sin();
        return Complex64::new(PI, 0.0) / (sin * lanczos(Complex64::new(1.0, 0.0) - s));
    }
    lanczos(s)
}

fn lanczos(s: Complex64) -> Complex64 {
    let z = s - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (k, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    let log_part = (z + 0.5) * t.ln() - t;
    (2.0 * PI).sqrt() * log_part.exp() * acc
}

/// Logarithm of Gamma for `Re s >= 0.5`, continuous along horizontal lines.
pub fn ln_gamma(s: Complex64) -> Result<Complex64> {
    check_pole(s)?;
    if s.re < 0.5 {
        return Ok(gamma_unchecked(s).ln());
    }
    let z = s - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (k, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln())
}

/// Real Gamma via the complex routine.
pub fn gamma_real(x: f64) -> Result<f64> {
    gamma(Complex64::new(x, 0.0)).map(|g| g.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel_err(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn known_values() {
        assert!((gamma(c(1.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        let half = gamma(c(0.5, 0.0)).unwrap();
        assert!((half.re - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(c(5.0, 0.0)).unwrap().re - 24.0).abs() < 1e-11);
    }

    #[test]
    fn mpmath_reference_values() {
        // mpmath.gamma at 30 digits
        let cases = [
            (
                c(1.0, 1.0),
                c(0.498_015_668_118_356, -0.154_949_828_301_810_7),
            ),
            (
                c(0.3, 50.0),
                c(6.370_867_395_389_613e-35, 6.229_287_583_307_557e-35),
            ),
            (
                c(45.0, 10.0),
                c(8.226_994_800_869_216e53, 2.900_008_851_360_302_4e53),
            ),
            (
                c(-15.5, 3.0),
                c(-5.985_413_372_227_398e-17, 1.145_068_991_068_730_4e-16),
            ),
        ];
        for (s, want) in cases {
            let got = gamma(s).unwrap();
            assert!(
                rel_err(got, want) < 1e-12,
                "gamma({s}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn poles_are_rejected() {
        assert!(matches!(gamma(c(0.0, 0.0)), Err(Error::GammaPole(0))));
        assert!(matches!(gamma(c(-3.0, 0.0)), Err(Error::GammaPole(-3))));
        assert!(gamma(c(-3.0, 1e-6)).is_ok());
    }

    #[test]
    fn ln_gamma_matches_log_of_gamma() {
        for s in [c(1.5, 0.0), c(2.0, 7.0), c(10.0, -3.0)] {
            let a = ln_gamma(s).unwrap().exp();
            assert!(rel_err(a, gamma(s).unwrap()) < 1e-13);
        }
    }
}
