//! Weighted second moments of weight-2, prime-level automorphic L-functions.
//!
//! The crate computes
//! `A(p^j, q, t) = sum_{f in S_2^*(q)} L(1/2 + it, f)^2 lambda_f(p^j)`
//! from modular-symbol eigenforms and compares it against closed-form main terms.
//!
//! Modules, bottom up:
//! - [`special`]: complex Gamma and zeta, divisor counts, primes.
//! - [`smoothing`]: the Mellin kernel `W_t(Y)` and truncation cutoffs.
//! - [`heckespace`]: weight-2 modular symbols for `Gamma_0(q)` and eigenform tables.
//! - [`lvalue`]: `L(1/2 + it, f)^2` through the approximate functional equation.
//! - [`moments`]: empirical moments, main terms, residues and contour cross-checks.
//! - [`harness`]: configuration, eigen-data cache, sweeps and verification suites.

pub mod error;
pub mod harness;
pub mod heckespace;
pub mod lvalue;
pub mod moments;
pub mod smoothing;
pub mod special;

pub use error::{Error, Result};
pub use heckespace::{EigenformTable, HeckeSpace};
pub use lvalue::AfeResult;
pub use moments::MomentRecord;
pub use smoothing::KernelParams;
pub use special::{ComplexValue, ZetaConstants};
