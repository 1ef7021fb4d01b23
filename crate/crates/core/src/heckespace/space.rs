use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use log::debug;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::exact::{kernel, Echelon, RationalMatrix, SparseRow, SparseVec};
use super::heilbronn::{cremona, merel};
use super::p1::P1;
use crate::error::{Error, Result};
use crate::special::{genus_x0_prime, is_prime};

/// Smallest and largest supported prime levels.
pub const MIN_LEVEL: u64 = 11;
pub const MAX_LEVEL: u64 = 5000;

/// Cuspidal plus-quotient of weight-2 modular symbols for `Gamma_0(q)`.
///
/// Two layers are kept: the full plus-quotient `M+` (dimension `dim + 1`, with the
/// Eisenstein line) and its cuspidal subspace `S+` (dimension `dim`), the kernel of
/// the boundary coefficient at infinity. The basis of `S+` is
/// `b_k = e_k - (psi_k / psi_{k0}) e_{k0}` for `k != k0`, so the `S+` coordinates of an
/// element of `S+` are its `M+` coordinates with row `k0` dropped.
#[derive(Debug)]
pub struct HeckeSpace {
    q: u64,
    dim: usize,
    p1: P1,
    symbol_coords: Vec<SparseVec>,
    basis_symbols: Vec<usize>,
    boundary: Vec<BigRational>,
    cusp_pivot: usize,
    hecke_cache: Mutex<BTreeMap<u64, Arc<RationalMatrix>>>,
    plus_cache: Mutex<BTreeMap<u64, Arc<RationalMatrix>>>,
    eisenstein: Mutex<Option<Arc<Vec<BigRational>>>>,
}

struct SignedUnionFind {
    parent: Vec<usize>,
    sign: Vec<i8>,
    zero: Vec<bool>,
}

impl SignedUnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            sign: vec![1; n],
            zero: vec![false; n],
        }
    }

    /// `(root, s)` with `x_i = s x_root`.
    fn find(&mut self, i: usize) -> (usize, i8) {
        let mut path = Vec::new();
        let mut cur = i;
        while self.parent[cur] != cur {
            path.push(cur);
            cur = self.parent[cur];
        }
        let root = cur;
        // Compress from the top so each node's sign becomes relative to the root.
        for &node in path.iter().rev() {
            let p = self.parent[node];
            if p != root {
                self.sign[node] *= self.sign[p];
                self.parent[node] = root;
            }
        }
        (root, if i == root { 1 } else { self.sign[i] })
    }

    /// Impose `x_i = s x_j`.
    fn union(&mut self, i: usize, j: usize, s: i8) {
        let (ri, si) = self.find(i);
        let (rj, sj) = self.find(j);
        let rel = si * s * sj;
        if ri == rj {
            if rel == -1 {
                self.zero[ri] = true;
            }
            return;
        }
        self.parent[ri] = rj;
        self.sign[ri] = rel;
        self.zero[rj] |= self.zero[ri];
    }
}

/// Genus of `X_0(q)`, the expected dimension of the space at prime level `q >= 5`.
pub fn genus_oracle(q: u64) -> u64 {
    genus_x0_prime(q)
}

/// Build the cuspidal plus-quotient of modular symbols at a prime level.
pub fn build_space(q: u64) -> Result<HeckeSpace> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&q) || !is_prime(q) {
        return Err(Error::UnsupportedLevel(q));
    }
    let p1 = P1::new(q);
    let n = p1.len();
    let idx = |c: i64, d: i64| p1.index(c, d).expect("unimodular pair");

    let mut uf = SignedUnionFind::new(n);
    for i in 0..n {
        let (c, d) = p1.pair(i);
        uf.union(i, idx(d, -c), -1);
        uf.union(i, idx(-c, d), 1);
    }
    let mut gen_of_root = vec![usize::MAX; n];
    let mut gen_symbol = Vec::new();
    let mut symbol_gen: Vec<Option<(usize, i8)>> = vec![None; n];
    for i in 0..n {
        let (r, s) = uf.find(i);
        if uf.zero[r] {
            continue;
        }
        if gen_of_root[r] == usize::MAX {
            gen_of_root[r] = gen_symbol.len();
            gen_symbol.push(r);
        }
        symbol_gen[i] = Some((gen_of_root[r], s));
    }
    let ngens = gen_symbol.len();

    let mut ech = Echelon::new(ngens);
    for i in 0..n {
        let (c, d) = p1.pair(i);
        let j = idx(d, -c - d);
        let k = idx(-c - d, c);
        if i > j || i > k {
            continue;
        }
        let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
        for s in [i, j, k] {
            if let Some((g, sg)) = symbol_gen[s] {
                *acc.entry(g).or_default() += i64::from(sg);
            }
        }
        let row: SparseRow = acc
            .into_iter()
            .filter(|&(_, v)| v != 0)
            .map(|(g, v)| (g, BigInt::from(v)))
            .collect();
        if !row.is_empty() {
            ech.insert(row);
        }
    }

    let free = ech.free_columns();
    let mut free_index = vec![None; ngens];
    for (k, &c) in free.iter().enumerate() {
        free_index[c] = Some(k);
    }
    let gen_coords: Vec<SparseVec> = (0..ngens).map(|c| ech.express(c, &free_index)).collect();
    let symbol_coords: Vec<SparseVec> = symbol_gen
        .iter()
        .map(|sg| match sg {
            None => Vec::new(),
            Some((g, 1)) => gen_coords[*g].clone(),
            Some((g, _)) => gen_coords[*g]
                .iter()
                .map(|(k, v)| (*k, -v.clone()))
                .collect(),
        })
        .collect();
    let basis_symbols: Vec<usize> = free.iter().map(|&c| gen_symbol[c]).collect();

    let psi = |i: usize| -> i64 {
        let (c, d) = p1.pair(i);
        let qi = q as i64;
        i64::from(c.rem_euclid(qi) == 0) - i64::from(d.rem_euclid(qi) == 0)
    };
    let boundary: Vec<BigRational> = basis_symbols
        .iter()
        .map(|&s| BigRational::from_integer(BigInt::from(psi(s))))
        .collect();
    let cusp_pivot = boundary
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .min_by_key(|(k, v)| (v.numer().magnitude().clone(), *k))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::InvalidArgument(format!("boundary map vanishes at level {q}")))?;

    let dim = basis_symbols.len() - 1;
    debug!(
        "level {q}: {n} Manin symbols, {ngens} generators, dim M+ = {}, dim S+ = {dim}",
        dim + 1
    );
    let expected = genus_oracle(q) as usize;
    if dim != expected {
        return Err(Error::InvalidArgument(format!(
            "level {q}: cuspidal plus-space has dimension {dim}, genus is {expected}"
        )));
    }
    Ok(HeckeSpace {
        q,
        dim,
        p1,
        symbol_coords,
        basis_symbols,
        boundary,
        cusp_pivot,
        hecke_cache: Mutex::new(BTreeMap::new()),
        plus_cache: Mutex::new(BTreeMap::new()),
        eisenstein: Mutex::new(None),
    })
}

impl HeckeSpace {
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Dimension of the cuspidal plus-space, the number of newforms.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p1(&self) -> &P1 {
        &self.p1
    }

    /// Dimension of the full plus-quotient.
    pub fn plus_dim(&self) -> usize {
        self.basis_symbols.len()
    }

    /// `M+` coordinates of Manin symbol `i`.
    pub fn symbol_coords(&self, i: usize) -> &SparseVec {
        &self.symbol_coords[i]
    }

    /// Manin symbols whose classes form the `M+` basis.
    pub fn basis_symbols(&self) -> &[usize] {
        &self.basis_symbols
    }

    /// Boundary coefficient at the cusp infinity of each `M+` basis element.
    pub fn boundary(&self) -> &[BigRational] {
        &self.boundary
    }

    /// The star involution `(c : d) -> (-c : d)` acts trivially on the quotient.
    pub fn star_is_trivial(&self) -> bool {
        (0..self.p1.len()).all(|i| {
            let (c, d) = self.p1.pair(i);
            let j = self.p1.index(-c, d).expect("unimodular pair");
            self.symbol_coords[i] == self.symbol_coords[j]
        })
    }

    fn apply<G>(&self, generate: G, n: u64) -> RationalMatrix
    where
        G: Fn(u64, &mut dyn FnMut(i64, i64, i64, i64)),
    {
        let m = self.plus_dim();
        let mut t = RationalMatrix::zeros(m, m);
        for (k, &s) in self.basis_symbols.iter().enumerate() {
            let (u, v) = self.p1.pair(s);
            let mut counts: BTreeMap<usize, i64> = BTreeMap::new();
            generate(n, &mut |a, b, c, d| {
                if let Some(j) = self.p1.index(u * a + v * c, u * b + v * d) {
                    *counts.entry(j).or_default() += 1;
                }
            });
            for (j, cnt) in counts {
                let w = BigRational::from_integer(BigInt::from(cnt));
                for (r, val) in &self.symbol_coords[j] {
                    t[(*r, k)] += val * &w;
                }
            }
        }
        t
    }

    /// Classical `T_n` on the full plus-quotient, for `n = 1` or prime `n`.
    pub fn hecke_plus(&self, n: u64) -> Result<Arc<RationalMatrix>> {
        if let Some(m) = self.plus_cache.lock().expect("cache lock").get(&n) {
            return Ok(Arc::clone(m));
        }
        let m = if n == 1 {
            RationalMatrix::identity(self.plus_dim())
        } else if !is_prime(n) {
            return Err(Error::UnsupportedHeckeIndex { n, q: self.q });
        } else if n == self.q {
            self.apply(|n, f| merel(n, f), n)
        } else {
            self.apply(|n, f| cremona(n, f), n)
        };
        let m = Arc::new(m);
        self.plus_cache
            .lock()
            .expect("cache lock")
            .insert(n, Arc::clone(&m));
        Ok(m)
    }

    /// Classical `T_n` on the cuspidal plus-space (integral eigenvalues `a_f(n)`).
    pub fn hecke_matrix(&self, n: u64) -> Result<Arc<RationalMatrix>> {
        if let Some(m) = self.hecke_cache.lock().expect("cache lock").get(&n) {
            return Ok(Arc::clone(m));
        }
        let t = self.hecke_plus(n)?;
        let k0 = self.cusp_pivot;
        let mut out = RationalMatrix::zeros(self.dim, self.dim);
        let rows: Vec<usize> = (0..self.plus_dim()).filter(|&r| r != k0).collect();
        for (col, &k) in rows.iter().enumerate() {
            let ratio = &self.boundary[k] / &self.boundary[k0];
            for (row, &r) in rows.iter().enumerate() {
                out[(row, col)] = &t[(r, k)] - &(&ratio * &t[(r, k0)]);
            }
        }
        let out = Arc::new(out);
        self.hecke_cache
            .lock()
            .expect("cache lock")
            .insert(n, Arc::clone(&out));
        Ok(out)
    }

    /// Indices `n` whose matrices are currently cached.
    pub fn cached_indices(&self) -> Vec<u64> {
        self.hecke_cache
            .lock()
            .expect("cache lock")
            .keys()
            .copied()
            .collect()
    }

    /// Eisenstein vector in `M+` coordinates: the kernel of `T_2 - 3` there.
    pub fn eisenstein(&self) -> Result<Arc<Vec<BigRational>>> {
        if let Some(e) = self.eisenstein.lock().expect("cache lock").as_ref() {
            return Ok(Arc::clone(e));
        }
        let t2 = self.hecke_plus(2)?;
        let three =
            RationalMatrix::identity(self.plus_dim()).scale(&BigRational::from_integer(3.into()));
        let mut ker = kernel(&(&*t2 - &three));
        if ker.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "level {}: T_2 - 3 has a {}-dimensional kernel on M+",
                self.q,
                ker.len()
            )));
        }
        let e = Arc::new(ker.pop().expect("one vector"));
        *self.eisenstein.lock().expect("cache lock") = Some(Arc::clone(&e));
        Ok(e)
    }

    /// Matrix (`dim x (q+1)`) sending each Manin symbol to the `S+` coordinates of its
    /// projection along the Eisenstein line.
    pub fn cuspidal_projection(&self) -> Result<DMatrix<f64>> {
        let e = self.eisenstein()?;
        let k0 = self.cusp_pivot;
        let psi_e: BigRational = e
            .iter()
            .zip(&self.boundary)
            .map(|(a, b)| a * b)
            .fold(BigRational::zero(), |s, x| s + x);
        if psi_e.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "level {}: Eisenstein vector has no boundary",
                self.q
            )));
        }
        let rows: Vec<usize> = (0..self.plus_dim()).filter(|&r| r != k0).collect();
        let n = self.p1.len();
        let mut out = DMatrix::<f64>::zeros(self.dim, n);
        let mut dense = vec![BigRational::zero(); self.plus_dim()];
        for i in 0..n {
            for v in dense.iter_mut() {
                v.set_zero();
            }
            let mut psi_x = BigRational::zero();
            for (k, v) in &self.symbol_coords[i] {
                dense[*k] = v.clone();
                psi_x += v * &self.boundary[*k];
            }
            let c = &psi_x / &psi_e;
            for (row, &r) in rows.iter().enumerate() {
                let val = &dense[r] - &(&c * &e[r]);
                out[(row, i)] = val.to_f64().unwrap_or(f64::NAN);
            }
        }
        Ok(out)
    }

    /// Exact trace of classical `T_n` on the cuspidal plus-space.
    pub fn classical_trace(&self, n: u64) -> Result<BigRational> {
        Ok(self.hecke_matrix(n)?.trace())
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }
}
