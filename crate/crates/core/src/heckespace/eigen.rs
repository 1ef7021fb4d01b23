//! Numerical simultaneous diagonalization of the Hecke algebra and fast
//! eigenvalues at many primes.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heilbronn::{cremona_images, merel};
use super::space::HeckeSpace;
use super::table::EigenformTable;
use crate::error::{Error, Result};
use crate::special::primes_up_to;

/// Primes whose operators are combined to split the space.
pub const GENERATOR_PRIMES: [u64; 3] = [2, 3, 5];

/// Minimum separation of the eigenvalues of the random combination.
pub const SPLIT_GAP: f64 = 1e-6;

/// Redraws of the combination before giving up.
pub const SPLIT_ATTEMPTS: usize = 10;

/// Residual bound for accepted eigenvectors.
pub const RESIDUAL_TOL: f64 = 1e-8;

const PRIME_CHUNK: usize = 128;

/// Left and right eigenvectors of the Hecke algebra on the cuspidal plus-space.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    q: u64,
    seed: u64,
    coefficients: [i64; 3],
    /// Columns are right eigenvectors, unit length.
    right: DMatrix<f64>,
    /// Rows are left eigenvectors scaled so that `w_f . v_f = 1`.
    left: DMatrix<f64>,
    /// Classical `a_2, a_3, a_5` by Rayleigh quotient.
    generators: Vec<[f64; 3]>,
    residual: Vec<f64>,
}

fn level_seed(seed: u64, q: u64) -> u64 {
    seed ^ q.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Inverse iteration for the eigenvector of `m` (or of `m^T`) near `mu`.
fn inverse_iteration(m: &DMatrix<f64>, mu: f64, transpose: bool) -> DVector<f64> {
    let n = m.nrows();
    let scale = m.norm().max(1.0);
    let shifted = m - DMatrix::identity(n, n) * (mu + 1e-11 * scale);
    let a = if transpose {
        shifted.transpose()
    } else {
        shifted
    };
    let lu = a.lu();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 1.0 / (i as f64 + 2.0));
    for _ in 0..4 {
        match lu.solve(&v) {
            Some(x) if x.iter().all(|z| z.is_finite()) && x.norm() > 0.0 => v = x.normalize(),
            _ => break,
        }
    }
    // Fix the overall sign so the vector is reproducible.
    let k = v.iamax();
    if v[k] < 0.0 {
        v = -v;
    }
    v
}

impl EigenBasis {
    /// Split the space with a seeded random combination `c2 T2 + c3 T3 + c5 T5`.
    pub fn compute(space: &HeckeSpace, seed: u64) -> Result<Self> {
        let q = space.q();
        let dim = space.dim();
        if dim == 0 {
            return Err(Error::EmptySpace(q));
        }
        let gens: Vec<DMatrix<f64>> = GENERATOR_PRIMES
            .iter()
            .map(|&p| space.hecke_matrix(p).map(|m| m.to_f64()))
            .collect::<Result<_>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(level_seed(seed, q));
        for attempt in 0..SPLIT_ATTEMPTS {
            let coefficients: [i64; 3] = std::array::from_fn(|_| rng.random_range(1..=100));
            let mut c = DMatrix::<f64>::zeros(dim, dim);
            for (k, g) in gens.iter().enumerate() {
                c += g * coefficients[k] as f64;
            }
            let Some(eig) = c.clone().schur().eigenvalues() else {
                debug!("level {q}: attempt {attempt} produced complex eigenvalues");
                continue;
            };
            let mut mus: Vec<f64> = eig.iter().copied().collect();
            mus.sort_by(f64::total_cmp);
            let gap = mus
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            if gap < SPLIT_GAP {
                debug!("level {q}: attempt {attempt} gap {gap:e}");
                continue;
            }
            return Self::from_eigenvalues(q, seed, coefficients, &c, &mus, &gens);
        }
        Err(Error::SplitFailure {
            q,
            attempts: SPLIT_ATTEMPTS,
        })
    }

    fn from_eigenvalues(
        q: u64,
        seed: u64,
        coefficients: [i64; 3],
        c: &DMatrix<f64>,
        mus: &[f64],
        gens: &[DMatrix<f64>],
    ) -> Result<Self> {
        let dim = mus.len();
        let mut forms: Vec<(DVector<f64>, DVector<f64>, [f64; 3], f64)> = Vec::with_capacity(dim);
        for &mu in mus {
            let v = inverse_iteration(c, mu, false);
            let w = inverse_iteration(c, mu, true);
            let wv = w.dot(&v);
            if wv.abs() < 1e-12 {
                return Err(Error::SplitFailure { q, attempts: 1 });
            }
            let w = w / wv;
            let mut a = [0.0; 3];
            let mut residual: f64 = 0.0;
            for (k, g) in gens.iter().enumerate() {
                let gv = g * &v;
                a[k] = w.dot(&gv);
                residual = residual.max((gv - &v * a[k]).norm());
            }
            forms.push((v, w, a, residual));
        }
        // Order forms by their generator eigenvalues, independent of the combination.
        let key = |a: &[f64; 3]| a.map(|x| (x * 1e6).round() as i64);
        forms.sort_by(|x, y| key(&x.2).cmp(&key(&y.2)).then(x.2[0].total_cmp(&y.2[0])));
        let right = DMatrix::from_columns(&forms.iter().map(|f| f.0.clone()).collect::<Vec<_>>());
        let left = DMatrix::from_rows(&forms.iter().map(|f| f.1.transpose()).collect::<Vec<_>>());
        let generators = forms.iter().map(|f| f.2).collect();
        let residual: Vec<f64> = forms.iter().map(|f| f.3).collect();
        let worst = residual.iter().copied().fold(0.0, f64::max);
        debug!("level {q}: split with {coefficients:?}, worst residual {worst:e}");
        if worst > RESIDUAL_TOL {
            return Err(Error::SplitFailure { q, attempts: 1 });
        }
        Ok(Self {
            q,
            seed,
            coefficients,
            right,
            left,
            generators,
            residual,
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.right.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Coefficients `(c2, c3, c5)` of the accepted combination.
    pub fn coefficients(&self) -> [i64; 3] {
        self.coefficients
    }

    /// Maximum eigenvector residual of form `f` over the generator operators.
    pub fn residual(&self, f: usize) -> f64 {
        self.residual[f]
    }

    /// Classical `a_2, a_3, a_5` of form `f`.
    pub fn generator_eigenvalues(&self, f: usize) -> [f64; 3] {
        self.generators[f]
    }

    /// Classical eigenvalues of `T_p` by Rayleigh quotient against the exact matrix.
    pub fn rayleigh(&self, space: &HeckeSpace, p: u64) -> Result<Vec<f64>> {
        let t = space.hecke_matrix(p)?.to_f64();
        let tv = &t * &self.right;
        Ok((0..self.dim())
            .map(|f| self.left.row(f).dot(&tv.column(f).transpose()))
            .collect())
    }

    /// Max residual `|T_p v_f - a_f(p) v_f|` over forms, for an exact `T_p`.
    pub fn residual_against(&self, space: &HeckeSpace, p: u64) -> Result<f64> {
        let t = space.hecke_matrix(p)?.to_f64();
        let a = self.rayleigh(space, p)?;
        Ok((0..self.dim())
            .map(|f| {
                let v = self.right.column(f);
                (&t * v - v * a[f]).norm()
            })
            .fold(0.0, f64::max))
    }

    /// Classical `a_f(r)` for each prime in `primes`, one row per prime.
    ///
    /// Uses `w_f . pi(x T_r) = a_f(r) w_f . pi(x)` for a few Manin symbols `x`,
    /// where `pi` projects onto the cuspidal plus-space; `x T_r` is a sum of
    /// Heilbronn images, so no matrix of `T_r` is formed.
    pub fn prime_coefficients(&self, space: &HeckeSpace, primes: &[u64]) -> Result<Vec<Vec<f64>>> {
        let q = self.q;
        let dim = self.dim();
        let proj = space.cuspidal_projection()?;
        let phi = (&self.left * proj).transpose(); // (q+1) x dim
        let (symbols, assignment) = choose_symbols(&phi);
        debug!("level {q}: fast eigenvalues from symbols {symbols:?}");
        let p1 = space.p1();
        let nsym = p1.len();
        let mut out = vec![vec![0.0; dim]; primes.len()];
        let pairs: Vec<(i64, i64)> = symbols.iter().map(|&x| p1.pair(x)).collect();
        let mut rows = vec![vec![0u32; nsym]; symbols.len()];
        for (chunk_idx, chunk) in primes.chunks(PRIME_CHUNK).enumerate() {
            let mut counts: Vec<DMatrix<f64>> =
                vec![DMatrix::zeros(chunk.len(), nsym); symbols.len()];
            for (ri, &r) in chunk.iter().enumerate() {
                rows.iter_mut()
                    .for_each(|row| row.iter_mut().for_each(|c| *c = 0));
                if r == q {
                    for (s, &(u, v)) in pairs.iter().enumerate() {
                        let row = &mut rows[s];
                        merel(r, |a, b, c, d| {
                            if let Some(j) = p1.index(u * a + v * c, u * b + v * d) {
                                row[j] += 1;
                            }
                        });
                    }
                } else {
                    cremona_images(r, q, p1.inverse_table(), &pairs, &mut rows);
                }
                for (s, row) in rows.iter().enumerate() {
                    for (j, &c) in row.iter().enumerate() {
                        if c != 0 {
                            counts[s][(ri, j)] = f64::from(c);
                        }
                    }
                }
            }
            for (s_idx, &x) in symbols.iter().enumerate() {
                let images = &counts[s_idx] * &phi; // chunk x dim
                for ri in 0..chunk.len() {
                    for f in 0..dim {
                        if assignment[f] == s_idx {
                            out[chunk_idx * PRIME_CHUNK + ri][f] = images[(ri, f)] / phi[(x, f)];
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Pick Manin symbols so that every form sees a projection coefficient within a
/// fixed fraction of its largest one; returns the symbols and each form's choice.
fn choose_symbols(phi: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    const COVER: f64 = 0.05;
    let (n, dim) = phi.shape();
    let col_max: Vec<f64> = (0..dim)
        .map(|f| phi.column(f).amax().max(f64::MIN_POSITIVE))
        .collect();
    let score = |i: usize, f: usize| phi[(i, f)].abs() / col_max[f];
    let mut symbols: Vec<usize> = Vec::new();
    let mut covered = vec![false; dim];
    while covered.iter().any(|c| !c) {
        let best = (0..n)
            .map(|i| {
                let newly = (0..dim)
                    .filter(|&f| !covered[f] && score(i, f) >= COVER)
                    .count();
                let worst = (0..dim)
                    .filter(|&f| !covered[f])
                    .map(|f| score(i, f))
                    .fold(f64::INFINITY, f64::min);
                (i, newly, worst)
            })
            .max_by(|a, b| a.1.cmp(&b.1).then(a.2.total_cmp(&b.2)).then(b.0.cmp(&a.0)))
            .expect("at least one symbol");
        if best.1 == 0 {
            // Unreachable for nonzero columns; fall back to the best symbol per form.
            for f in 0..dim {
                if !covered[f] {
                    let i = (0..n)
                        .max_by(|&a, &b| score(a, f).total_cmp(&score(b, f)))
                        .unwrap_or(0);
                    if !symbols.contains(&i) {
                        symbols.push(i);
                    }
                    covered[f] = true;
                }
            }
            break;
        }
        symbols.push(best.0);
        for f in 0..dim {
            if score(best.0, f) >= COVER {
                covered[f] = true;
            }
        }
    }
    let assignment = (0..dim)
        .map(|f| {
            (0..symbols.len())
                .max_by(|&a, &b| {
                    score(symbols[a], f)
                        .total_cmp(&score(symbols[b], f))
                        .then(b.cmp(&a))
                })
                .expect("nonempty")
        })
        .collect();
    (symbols, assignment)
}

/// Prime bound needed by the functional-equation sign test at level `q`.
pub fn sign_prime_bound(q: u64) -> u64 {
    (9.0 * (q as f64).sqrt()).ceil() as u64 + 10
}

/// Default eigenvalue range of [`eigen_split`].
pub fn default_n_max(q: u64) -> u64 {
    sign_prime_bound(q).max(50)
}

/// Eigenform tables for every newform of the space, with `lambda(n)` for `n <= default_n_max(q)`.
///
/// Empty spaces give an empty list.
pub fn eigen_split(space: &HeckeSpace, seed: u64) -> Result<Vec<EigenformTable>> {
    eigen_tables(space, seed, default_n_max(space.q()))
}

/// Eigenform tables with normalized eigenvalues at all `n <= n_max`.
pub fn eigen_tables(space: &HeckeSpace, seed: u64, n_max: u64) -> Result<Vec<EigenformTable>> {
    if space.dim() == 0 {
        return Ok(Vec::new());
    }
    let basis = EigenBasis::compute(space, seed)?;
    tables_from_basis(space, &basis, n_max)
}

/// Tables from an existing eigenbasis.
pub fn tables_from_basis(
    space: &HeckeSpace,
    basis: &EigenBasis,
    n_max: u64,
) -> Result<Vec<EigenformTable>> {
    let q = space.q();
    let prime_limit = n_max.max(sign_prime_bound(q));
    let primes = primes_up_to(prime_limit);
    let coeffs = basis.prime_coefficients(space, &primes)?;
    (0..basis.dim())
        .map(|f| {
            let values: Vec<(u64, f64)> = primes
                .iter()
                .zip(&coeffs)
                .map(|(&p, row)| (p, row[f] / (p as f64).sqrt()))
                .collect();
            let mut table = EigenformTable::from_primes(q, f, values, n_max, basis.residual(f))?;
            table.sign = super::sign::sign_of_functional_equation(&table)?;
            Ok(table)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heckespace::{build_space, trace};
    use num_traits::ToPrimitive;

    #[test]
    fn level_11_table() {
        let space = build_space(11).unwrap();
        let tables = eigen_split(&space, 7).unwrap();
        assert_eq!(tables.len(), 1);
        let t = &tables[0];
        assert!((t.lambda(2).unwrap() + 2f64.sqrt()).abs() < 1e-10);
        assert!((t.lambda(3).unwrap() + 1.0 / 3f64.sqrt()).abs() < 1e-10);
        assert!((t.lambda(6).unwrap() - 0.816496580927726).abs() < 1e-10);
        assert!((t.lambda(11).unwrap().powi(2) - 1.0 / 11.0).abs() < 1e-10);
        assert_eq!(t.sign, 1);
        assert!(t.residual <= RESIDUAL_TOL);
    }

    #[test]
    fn level_37_signs_and_traces() {
        let space = build_space(37).unwrap();
        let tables = eigen_split(&space, 1).unwrap();
        assert_eq!(tables.len(), 2);
        let mut signs: Vec<i8> = tables.iter().map(|t| t.sign).collect();
        signs.sort();
        assert_eq!(signs, vec![-1, 1]);
        for t in &tables {
            let cross = 37f64.sqrt() * t.lambda(37).unwrap();
            assert!((cross - f64::from(t.sign)).abs() < 1e-6);
        }
        for p in crate::special::primes_up_to(50) {
            let exact = space.classical_trace(p).unwrap().to_f64().unwrap() / (p as f64).sqrt();
            assert!((trace(&tables, p).unwrap() - exact).abs() < 1e-8, "p = {p}");
        }
    }

    #[test]
    fn rayleigh_matches_fast_route() {
        let space = build_space(101).unwrap();
        let basis = EigenBasis::compute(&space, 3).unwrap();
        let primes = [2u64, 7, 13, 47, 101];
        let fast = basis.prime_coefficients(&space, &primes).unwrap();
        for (k, &p) in primes.iter().enumerate() {
            let slow = basis.rayleigh(&space, p).unwrap();
            for f in 0..basis.dim() {
                assert!((fast[k][f] - slow[f]).abs() < 1e-9, "p = {p}, f = {f}");
            }
            assert!(basis.residual_against(&space, p).unwrap() < 1e-8);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let space = build_space(101).unwrap();
        let a = eigen_tables(&space, 42, 200).unwrap();
        let b = eigen_tables(&space, 42, 200).unwrap();
        assert_eq!(a, b);
        let empty = build_space(13).unwrap();
        assert!(eigen_split(&empty, 1).unwrap().is_empty());
        assert!(matches!(
            EigenBasis::compute(&empty, 1),
            Err(Error::EmptySpace(13))
        ));
    }
}
