//! Sign of the functional equation from the completed L-function.
//!
//! With `X = 2 pi / sqrt(q)`, splitting the Mellin integral of
//! `Lambda(s) = (sqrt(q) / 2 pi)^s Gamma(s + 1/2) L(s)` at `y = A` gives
//! `Lambda(s) = P_A(s) + eps Q_A(s)` with
//! `P_A = sum lambda(n) (nX)^{-s} Gamma(s + 1/2, nXA)` and
//! `Q_A = sum lambda(n) (nX)^{s-1} Gamma(3/2 - s, nX/A)`.
//! Only the true sign makes the result independent of `A`.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, gamma_ur};

use super::eigen::sign_prime_bound;
use super::table::{lambda_extend, EigenformTable};
use crate::error::{Error, Result};

const SPLIT_POINTS: [f64; 2] = [1.0, 1.25];
const TEST_S: f64 = 0.6;
const SIGN_TOL: f64 = 1e-4;

fn dense_lambda(table: &EigenformTable, bound: u64) -> Result<Vec<f64>> {
    if table.n_max >= bound {
        Ok(table.lambda[..=bound as usize].to_vec())
    } else if table.prime_limit() >= bound {
        Ok(lambda_extend(table, bound)?.lambda)
    } else {
        Err(Error::InsufficientTable {
            q: table.q,
            have: table.prime_limit(),
            need: bound,
        })
    }
}

/// `(P_A(s), Q_A(s))` for real `0 < s < 3/2`.
pub fn completed_halves(table: &EigenformTable, s: f64, a: f64) -> Result<(f64, f64)> {
    let bound = sign_prime_bound(table.q);
    let lam = dense_lambda(table, bound)?;
    let x = 2.0 * PI / (table.q as f64).sqrt();
    let (g1, g2) = (gamma(s + 0.5), gamma(1.5 - s));
    let mut p = 0.0;
    let mut q = 0.0;
    for (n, &l) in lam.iter().enumerate().skip(1) {
        let nx = n as f64 * x;
        p += l * nx.powf(-s) * g1 * gamma_ur(s + 0.5, nx * a);
        q += l * nx.powf(s - 1.0) * g2 * gamma_ur(1.5 - s, nx / a);
    }
    Ok((p, q))
}

/// The ratio whose value is the sign: `(P_{A2} - P_{A1}) / (Q_{A1} - Q_{A2})`.
pub fn sign_ratio(table: &EigenformTable) -> Result<f64> {
    let (p1, q1) = completed_halves(table, TEST_S, SPLIT_POINTS[0])?;
    let (p2, q2) = completed_halves(table, TEST_S, SPLIT_POINTS[1])?;
    Ok((p2 - p1) / (q1 - q2))
}

/// `eps_f` with `Lambda(s, f) = eps_f Lambda(1 - s, f)`.
pub fn sign_of_functional_equation(table: &EigenformTable) -> Result<i8> {
    let ratio = sign_ratio(table)?;
    if ratio.is_finite() && (ratio.abs() - 1.0).abs() <= SIGN_TOL {
        Ok(if ratio > 0.0 { 1 } else { -1 })
    } else {
        Err(Error::IndeterminateSign { ratio })
    }
}
