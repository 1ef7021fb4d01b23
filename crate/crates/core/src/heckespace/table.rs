use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::FactorSieve;

/// Normalized Hecke eigenvalues `lambda_f(n) = a_f(n) / sqrt(n)` of one newform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenformTable {
    pub q: u64,
    /// Position of the form in its level's deterministic ordering.
    pub index: usize,
    /// `lambda[n]` is stored for `n <= n_max`; `lambda[0]` is unused.
    pub n_max: u64,
    pub lambda: Vec<f64>,
    /// Functional-equation sign, `0` until determined.
    pub sign: i8,
    /// Largest eigenvector residual over the generator operators.
    pub residual: f64,
    /// Prime eigenvalues the table was built from, sorted by prime. May reach past `n_max`.
    pub primes: Vec<(u64, f64)>,
}

impl EigenformTable {
    /// Build a table from prime eigenvalues and extend it to `n_max`.
    pub fn from_primes(
        q: u64,
        index: usize,
        primes: Vec<(u64, f64)>,
        n_max: u64,
        residual: f64,
    ) -> Result<Self> {
        let mut primes = primes;
        primes.sort_by_key(|e| e.0);
        let lambda = extend_dense(q, &primes, n_max)?;
        Ok(Self {
            q,
            index,
            n_max,
            lambda,
            sign: 0,
            residual,
            primes,
        })
    }

    pub fn lambda(&self, n: u64) -> Option<f64> {
        if n == 0 || n > self.n_max {
            None
        } else {
            Some(self.lambda[n as usize])
        }
    }

    /// Largest prime with a stored eigenvalue.
    pub fn prime_limit(&self) -> u64 {
        self.primes.last().map_or(1, |e| e.0)
    }

    /// `|lambda(m) lambda(n) - sum_{d | (m,n), (d,q)=1} lambda(mn/d^2)|`, when every
    /// index involved is stored.
    pub fn hecke_defect(&self, m: u64, n: u64) -> Option<f64> {
        let lhs = self.lambda(m)? * self.lambda(n)?;
        let g = num_integer::gcd(m, n);
        let mut rhs = 0.0;
        for d in 1..=g {
            if g.is_multiple_of(d) && d % self.q != 0 {
                rhs += self.lambda(m * n / (d * d))?;
            }
        }
        Some((lhs - rhs).abs())
    }

    /// `max_n |lambda(n)| - tau(n)` over the stored range.
    pub fn deligne_excess(&self) -> f64 {
        let tau = FactorSieve::new(self.n_max as usize).divisor_counts();
        (1..=self.n_max as usize)
            .map(|n| self.lambda[n].abs() - f64::from(tau[n]))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn extend_dense(q: u64, primes: &[(u64, f64)], n: u64) -> Result<Vec<f64>> {
    let n = n as usize;
    let sieve = FactorSieve::new(n.max(1));
    let mut lp = vec![f64::NAN; n + 1];
    for &(p, v) in primes {
        if (p as usize) <= n {
            lp[p as usize] = v;
        }
    }
    let mut lam = vec![0.0; n + 1];
    if n >= 1 {
        lam[1] = 1.0;
    }
    // Largest power of the smallest prime factor dividing m.
    let mut pp = vec![0usize; n + 1];
    for m in 2..=n {
        let p = sieve.smallest_factor(m);
        let rest = m / p;
        pp[m] = if rest.is_multiple_of(p) { pp[rest] * p } else { p };
        if pp[m] == m {
            if m == p {
                if lp[p].is_nan() {
                    return Err(Error::MissingPrime { q, n: p as u64 });
                }
                lam[m] = lp[p];
            } else if p as u64 == q {
                lam[m] = lam[p] * lam[rest];
            } else {
                lam[m] = lam[p] * lam[rest] - lam[rest / p];
            }
        } else {
            lam[m] = lam[pp[m]] * lam[m / pp[m]];
        }
    }
    Ok(lam)
}

/// Extend a table's prime eigenvalues to every `n <= n`.
pub fn lambda_extend(table: &EigenformTable, n: u64) -> Result<EigenformTable> {
    let lambda = extend_dense(table.q, &table.primes, n)?;
    Ok(EigenformTable {
        n_max: n,
        lambda,
        ..table.clone()
    })
}

/// `sum_f lambda_f(n)` over a level's tables.
pub fn trace(tables: &[EigenformTable], n: u64) -> Result<f64> {
    let mut s = 0.0;
    for t in tables {
        s += t.lambda(n).ok_or(Error::InsufficientTable {
            q: t.q,
            have: t.n_max,
            need: n,
        })?;
    }
    Ok(s)
}
