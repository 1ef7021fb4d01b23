//! Exact linear algebra over `Q`: an incremental fraction-free reduced echelon form
//! on sparse big-integer rows, and a small dense rational matrix type.

use std::fmt;
use std::ops::{Mul, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Sparse integer row, sorted by column, without zero entries.
pub type SparseRow = Vec<(usize, BigInt)>;

/// Sparse rational vector, sorted by index, without zero entries.
pub type SparseVec = Vec<(usize, BigRational)>;

/// `a * x - b * y` on sparse rows.
fn combine(a: &BigInt, x: &SparseRow, b: &BigInt, y: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let take_x = j >= y.len() || (i < x.len() && x[i].0 < y[j].0);
        let take_y = i >= x.len() || (j < y.len() && y[j].0 < x[i].0);
        if take_x {
            out.push((x[i].0, a * &x[i].1));
            i += 1;
        } else if take_y {
            out.push((y[j].0, -(b * &y[j].1)));
            j += 1;
        } else {
            let v = a * &x[i].1 - b * &y[j].1;
            if !v.is_zero() {
                out.push((x[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn make_primitive(row: &mut SparseRow) {
    let mut g = BigInt::zero();
    for (_, v) in row.iter() {
        g = g.gcd(v);
        if g.is_one() {
            return;
        }
    }
    if g > BigInt::one() {
        for (_, v) in row.iter_mut() {
            *v /= &g;
        }
    }
}

fn entry(row: &SparseRow, col: usize) -> Option<&BigInt> {
    row.binary_search_by_key(&col, |e| e.0)
        .ok()
        .map(|k| &row[k].1)
}

/// Reduced row echelon form built one relation at a time.
///
/// Every stored row holds exactly one pivot column; the other columns it touches are free.
#[derive(Debug, Clone)]
pub struct Echelon {
    ncols: usize,
    rows: Vec<SparseRow>,
    pivot_cols: Vec<usize>,
    row_of_pivot: Vec<Option<usize>>,
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows: Vec::new(),
            pivot_cols: Vec::new(),
            row_of_pivot: vec![None; ncols],
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Eliminate every pivot column from `row`.
    pub fn reduce(&self, mut row: SparseRow) -> SparseRow {
        let hits: Vec<usize> = row
            .iter()
            .filter_map(|&(c, _)| self.row_of_pivot[c])
            .collect();
        for r in hits {
            let c = self.pivot_cols[r];
            let Some(b) = entry(&row, c).cloned() else {
                continue;
            };
            let prow = &self.rows[r];
            let a = entry(prow, c).expect("pivot entry present");
            let g = a.gcd(&b);
            row = combine(&(a / &g), &row, &(b / &g), prow);
            make_primitive(&mut row);
        }
        row
    }

    /// Add a relation; returns true when it raised the rank.
    pub fn insert(&mut self, row: SparseRow) -> bool {
        let mut row = self.reduce(row);
        if row.is_empty() {
            return false;
        }
        // Prefer a unit pivot to keep entries small.
        let k = row
            .iter()
            .enumerate()
            .min_by(|x, y| x.1 .1.abs().cmp(&y.1 .1.abs()).then(y.1 .0.cmp(&x.1 .0)))
            .map(|(k, _)| k)
            .expect("row is nonempty");
        let c = row[k].0;
        if row[k].1.is_negative() {
            for (_, v) in row.iter_mut() {
                *v = -&*v;
            }
        }
        make_primitive(&mut row);
        let a = entry(&row, c).expect("pivot entry present").clone();
        for r in 0..self.rows.len() {
            if let Some(b) = entry(&self.rows[r], c).cloned() {
                let pc = self.pivot_cols[r];
                let g = a.gcd(&b);
                let mut updated = combine(&(&a / &g), &self.rows[r], &(&b / &g), &row);
                make_primitive(&mut updated);
                if entry(&updated, pc).is_some_and(|v| v.is_negative()) {
                    for (_, v) in updated.iter_mut() {
                        *v = -&*v;
                    }
                }
                self.rows[r] = updated;
            }
        }
        self.row_of_pivot[c] = Some(self.rows.len());
        self.pivot_cols.push(c);
        self.rows.push(row);
        true
    }

    /// Columns without a pivot, in increasing order.
    pub fn free_columns(&self) -> Vec<usize> {
        (0..self.ncols)
            .filter(|&c| self.row_of_pivot[c].is_none())
            .collect()
    }

    /// Expression of column `col` in terms of the free columns, indexed by position
    /// in [`Echelon::free_columns`].
    pub fn express(&self, col: usize, free_index: &[Option<usize>]) -> SparseVec {
        match self.row_of_pivot[col] {
            None => vec![(free_index[col].expect("free column"), BigRational::one())],
            Some(r) => {
                let row = &self.rows[r];
                let a = entry(row, col).expect("pivot entry present");
                let mut out: SparseVec = row
                    .iter()
                    .filter(|(c, _)| *c != col)
                    .map(|(c, v)| {
                        (
                            free_index[*c].expect("free column"),
                            BigRational::new(-v.clone(), a.clone()),
                        )
                    })
                    .collect();
                out.sort_by_key(|e| e.0);
                out
            }
        }
    }

    /// Basis of the solution space of the inserted relations, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<BigRational>> {
        let free = self.free_columns();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); self.ncols];
                v[f] = BigRational::one();
                for (r, row) in self.rows.iter().enumerate() {
                    if let Some(b) = entry(row, f) {
                        let c = self.pivot_cols[r];
                        let a = entry(row, c).expect("pivot entry present");
                        v[c] = BigRational::new(-b.clone(), a.clone());
                    }
                }
                v
            })
            .collect()
    }
}

/// Dense matrix over `Q`, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn trace(&self) -> BigRational {
        (0..self.rows.min(self.cols)).fold(BigRational::zero(), |acc, i| acc + &self[(i, i)])
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|v| v.is_integer())
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].to_f64().unwrap_or(f64::NAN)
        })
    }

    /// Integer rows of `self` (each row scaled by the lcm of its denominators).
    pub fn integer_rows(&self) -> Vec<SparseRow> {
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                let l = row.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(j, v)| (j, v.numer() * (&l / v.denom())))
                    .collect()
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &RationalMatrix {
    type Output = RationalMatrix;
    fn mul(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = RationalMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }
}

impl Sub for &RationalMatrix {
    type Output = RationalMatrix;
    fn sub(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "dimension mismatch"
        );
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Kernel of a rational matrix, as exact column vectors.
pub fn kernel(m: &RationalMatrix) -> Vec<Vec<BigRational>> {
    let mut ech = Echelon::new(m.ncols());
    for row in m.integer_rows() {
        ech.insert(row);
    }
    ech.kernel()
}
