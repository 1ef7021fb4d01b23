//! Special functions and arithmetic functions used by every formula in the crate.

mod arith;
mod gamma;
mod zeta;

pub use arith::{divisor_count, factorize, genus_x0_prime, is_prime, primes_up_to, FactorSieve};
pub(crate) use gamma::gamma_unchecked;
pub use gamma::{gamma, gamma_real, ln_gamma, EULER_GAMMA};
pub use zeta::{
    zeta, zeta_and_derivative, zeta_and_derivative_with, zeta_log_deriv, zeta_q, zeta_with,
    ZetaConfig, ZetaConstants,
};

/// Double-precision complex scalar used for `s`, `u`, `t`, L-values and kernel values.
pub type ComplexValue = num_complex::Complex64;
