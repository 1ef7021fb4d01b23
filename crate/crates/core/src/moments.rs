//! Twisted second moments `A(p^j, q, t) = sum_f L(1/2+it, f)^2 lambda_f(p^j)`, their
//! closed-form main terms, and the contour and trace-route checks of those main terms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heckespace::EigenformTable;
use crate::lvalue::{kernel_table, AfeWeights};
use crate::smoothing::integrate_vertical;
use crate::special::{gamma, zeta, zeta_q, ComplexValue, FactorSieve, ZetaConstants};

/// `t` is treated as zero below this.
pub const T_ZERO: f64 = 1e-12;
/// Below this `|t|` the two simple poles nearly merge and the pole pair is large.
pub const NEAR_MERGE: f64 = 1e-3;
/// `|main_term|` below which no ratio is reported.
pub const RATIO_FLOOR: f64 = 1e-12;
/// The shifted contour sits at `Re u = -1/2 + CONTOUR_EPS`.
pub const CONTOUR_EPS: f64 = 0.1;

const MELLIN_TOL: f64 = 1e-11;
const MELLIN_STEP: f64 = 0.05;
const MELLIN_HALFWIDTH: f64 = 10.0;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn is_zero(t: f64) -> bool {
    t.abs() < T_ZERO
}

/// `x^{-s}` for real `x > 0`.
fn pow_neg(x: f64, s: Complex64) -> Complex64 {
    (-s * x.ln()).exp()
}

fn zeta_pt(s: Complex64) -> Complex64 {
    zeta(s).expect("argument stays off the pole")
}

fn zeta_q_pt(s: Complex64, q: u64) -> Complex64 {
    zeta_q(s, q).expect("argument stays off the pole")
}

fn gamma_pt(s: Complex64) -> Complex64 {
    gamma(s).expect("argument stays off the poles")
}

/// `zeta^3(s) / zeta(2s)`.
fn cube_ratio(s: Complex64) -> Complex64 {
    let z = zeta_pt(s);
    z * z * z / zeta_pt(2.0 * s)
}

/// `Gamma(1-it)^2 / Gamma(1+it)^2 (q / 4 pi^2)^{-2it}`.
fn dual_factor(q: u64, t: f64) -> Complex64 {
    let gp = gamma_pt(c(1.0, t));
    let gm = gamma_pt(c(1.0, -t));
    (gm * gm) / (gp * gp) * Complex64::from_polar(1.0, -2.0 * t * (q as f64 / (4.0 * PI * PI)).ln())
}

/// Closed-form main term of `A(p, q, t)`.
pub fn main_term_thm11(p: u64, q: u64, t: f64) -> ComplexValue {
    let (pf, qf) = (p as f64, q as f64);
    if is_zero(t) {
        let z = ZetaConstants::get();
        let bracket = (qf / (4.0 * PI * PI * pf)).ln()
            + 2.0 * pf.ln() / (1.0 + pf * pf)
            + z.log_deriv_combination();
        let v = (1.0 + 1.0 / pf) * (1.0 - 1.0 / qf) / (1.0 + pf.powi(-2)) * z.cube_ratio() / 6.0
            * qf
            / pf.sqrt()
            * bracket;
        return c(v, 0.0);
    }
    let term = |sg: f64| {
        let it = c(0.0, sg * t);
        zeta_q_pt(1.0 + 2.0 * it, q) / (6.0 * (1.0 + pow_neg(pf, 2.0 + 2.0 * it)))
            * cube_ratio(2.0 + 2.0 * it)
            * (qf * (pf + 1.0))
            * pow_neg(pf, 1.5 + it)
    };
    dual_factor(q, t) * term(-1.0) + term(1.0)
}

/// Closed-form main term of `A(p^2, q, t)`.
pub fn main_term_thm12(p: u64, q: u64, t: f64) -> ComplexValue {
    let (pf, qf) = (p as f64, q as f64);
    if is_zero(t) {
        let z = ZetaConstants::get();
        let cr = z.cube_ratio();
        let h = (3.0 - pf.powi(-2)) / (1.0 + pf.powi(-2));
        let first = (qf - 1.0) * cr / (12.0 * pf * pf)
            * (pf + (pf + 1.0) * h)
            * ((qf / (4.0 * PI * PI * pf * pf)).ln() + z.log_deriv_combination());
        let second = (qf - 1.0) * cr * pf.ln() / (6.0 * pf)
            * (1.0 + 4.0 * pf * (pf + 1.0) * h / ((pf * pf + 1.0) * (3.0 * pf * pf - 1.0)));
        return c(first + second, 0.0);
    }
    let term = |sg: f64| {
        let it = c(0.0, sg * t);
        let w = 2.0 + 2.0 * it;
        zeta_q_pt(1.0 + 2.0 * it, q) * cube_ratio(w) / 12.0
            * (qf / pf + qf * (pf + 1.0) * (3.0 - pow_neg(pf, w)) / (pow_neg(pf, -w) + 1.0))
    };
    term(1.0) + dual_factor(q, t) * term(-1.0)
}

/// Main term of `A(p^j, q, t)`.
pub fn main_term(j: u32, p: u64, q: u64, t: f64) -> Result<ComplexValue> {
    match j {
        1 => Ok(main_term_thm11(p, q, t)),
        2 => Ok(main_term_thm12(p, q, t)),
        _ => Err(Error::InvalidArgument(format!("j must be 1 or 2, got {j}"))),
    }
}

/// Main term of the unweighted second moment `sum_f L(1/2, f)^2`.
pub fn second_moment_main(q: u64) -> f64 {
    let z = ZetaConstants::get();
    let qf = q as f64;
    z.cube_ratio() / 12.0 * qf * (qf / (4.0 * PI * PI)).ln()
        + z.cube_ratio() / 6.0 * (3.0 * z.zeta2_logderiv - 2.0 * z.zeta4_logderiv) * qf
}

/// The `q` at which [`second_moment_main`] changes sign.
pub fn second_moment_zero() -> f64 {
    let z = ZetaConstants::get();
    4.0 * PI * PI * (-2.0 * (3.0 * z.zeta2_logderiv - 2.0 * z.zeta4_logderiv)).exp()
}

/// One row of the comparison between an empirical moment and its main term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub q: u64,
    pub p: u64,
    pub j: u32,
    pub t: f64,
    /// Number of forms in the family.
    pub dim: usize,
    pub empirical: ComplexValue,
    pub main_term: ComplexValue,
    /// `empirical / main_term`, absent when the main term is below [`RATIO_FLOOR`].
    pub ratio: Option<ComplexValue>,
    pub abs_residual: f64,
    pub n_cutoff: u64,
    pub notes: Vec<String>,
}

impl MomentRecord {
    /// Largest field-wise distance between `self` and the conjugate of `other`.
    pub fn conjugate_defect(&self, other: &MomentRecord) -> f64 {
        let mut d = (self.empirical - other.empirical.conj()).norm();
        d = d.max((self.main_term - other.main_term.conj()).norm());
        d = d.max((self.abs_residual - other.abs_residual).abs());
        match (self.ratio, other.ratio) {
            (Some(a), Some(b)) => d.max((a - b.conj()).norm()),
            (None, None) => d,
            _ => f64::INFINITY,
        }
    }
}

fn check_j(j: u32) -> Result<()> {
    if j == 1 || j == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("j must be 1 or 2, got {j}")))
    }
}

fn check_twist(p: u64, q: u64) -> Result<()> {
    if p == q {
        Err(Error::InvalidArgument(format!(
            "twist prime {p} equals the level"
        )))
    } else {
        Ok(())
    }
}

/// `A(p^j, q, t)` from precomputed weights, form by form.
pub fn empirical_with_weights(
    weights: &AfeWeights,
    tables: &[EigenformTable],
    j: u32,
    p: u64,
) -> Result<ComplexValue> {
    check_j(j)?;
    check_twist(p, weights.q())?;
    let pj = p.pow(j);
    let mut total = c(0.0, 0.0);
    for f in tables {
        let l2 = weights.evaluate(f)?.value;
        let lp = f.lambda(pj).ok_or(Error::InsufficientTable {
            q: f.q,
            have: f.n_max,
            need: pj,
        })?;
        total += l2 * lp;
    }
    Ok(total)
}

/// `A(p^j, q, t) = sum_f L(1/2+it, f)^2 lambda_f(p^j)`; an empty family gives 0.
pub fn empirical_moment(
    q: u64,
    tables: &[EigenformTable],
    j: u32,
    p: u64,
    t: f64,
    tol: f64,
) -> Result<ComplexValue> {
    check_j(j)?;
    check_twist(p, q)?;
    if tables.is_empty() {
        return Ok(c(0.0, 0.0));
    }
    let weights = AfeWeights::new(q, t, tol)?;
    empirical_with_weights(&weights, tables, j, p)
}

/// Record for `(q, p, j, t)` from precomputed weights.
pub fn moment_record_with_weights(
    weights: &AfeWeights,
    tables: &[EigenformTable],
    j: u32,
    p: u64,
) -> Result<MomentRecord> {
    let (q, t) = (weights.q(), weights.t());
    let empirical = if tables.is_empty() {
        c(0.0, 0.0)
    } else {
        empirical_with_weights(weights, tables, j, p)?
    };
    let main_term = main_term(j, p, q, t)?;
    let mut notes = Vec::new();
    if tables.is_empty() {
        notes.push(format!("empty family at level {q}"));
    }
    let exponent = if j == 1 { 1.0 / 55.0 } else { 1.0 / 110.0 };
    if (p as f64) >= (q as f64).powf(exponent) {
        notes.push(format!(
            "p = {p} lies outside the asymptotic range p < q^{exponent:.5}"
        ));
    }
    if !is_zero(t) && t.abs() < NEAR_MERGE {
        notes.push(format!(
            "|t| = {:e} is close to the merged double pole",
            t.abs()
        ));
    }
    let ratio = (main_term.norm() >= RATIO_FLOOR).then(|| empirical / main_term);
    Ok(MomentRecord {
        q,
        p,
        j,
        t,
        dim: tables.len(),
        empirical,
        main_term,
        ratio,
        abs_residual: (empirical - main_term).norm(),
        n_cutoff: weights.n_cutoff(),
        notes,
    })
}

/// Record for `(q, p, j, t)` at accuracy `tol`.
pub fn moment_record(
    q: u64,
    tables: &[EigenformTable],
    j: u32,
    p: u64,
    t: f64,
    tol: f64,
) -> Result<MomentRecord> {
    check_j(j)?;
    check_twist(p, q)?;
    let weights = AfeWeights::new(q, t, tol)?;
    moment_record_with_weights(&weights, tables, j, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeRecord {
    /// `A(p, q, 0) - sqrt(p/q) A(q, p, 0)`.
    pub lhs: f64,
    pub rhs_main: f64,
}

/// Both sides of the exchange identity between levels `q` and `p`.
pub fn exchange_identity(
    p: u64,
    q: u64,
    tables_q: &[EigenformTable],
    tables_p: &[EigenformTable],
    tol: f64,
) -> Result<ExchangeRecord> {
    let a = empirical_moment(q, tables_q, 1, p, 0.0, tol)?;
    let b = empirical_moment(p, tables_p, 1, q, 0.0, tol)?;
    let (pf, qf) = (p as f64, q as f64);
    let z = ZetaConstants::get();
    let scale = qf / pf.sqrt();
    let rhs_main = z.cube_ratio() / 6.0 * scale * (qf / (4.0 * PI * PI * pf)).ln()
        + z.cube_ratio() / 3.0 * (3.0 * z.zeta2_logderiv - 2.0 * z.zeta4_logderiv) * scale;
    Ok(ExchangeRecord {
        lhs: a.re - (pf / qf).sqrt() * b.re,
        rhs_main,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    /// `sum tau(l^2) l^{-s}`
    Plain,
    /// `sum tau(p l^2) l^{-s}`
    P,
    /// `sum tau(p^2 l^2) l^{-s}`
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRecord {
    pub truncated: ComplexValue,
    pub closed_form: ComplexValue,
}

/// Truncated divisor series against its closed form in `zeta^3(s) / zeta(2s)`.
pub fn tau_square_series(
    kind: SeriesKind,
    p: u64,
    s: ComplexValue,
    l: usize,
) -> Result<SeriesRecord> {
    if s.re < 1.5 {
        return Err(Error::InvalidArgument(format!(
            "series needs Re s >= 1.5, got {s}"
        )));
    }
    if l < 1000 {
        return Err(Error::InvalidArgument(format!(
            "series needs L >= 1000, got {l}"
        )));
    }
    let sieve = FactorSieve::new(l);
    let extra = match kind {
        SeriesKind::Plain => 0,
        SeriesKind::P => 1,
        SeriesKind::P2 => 2,
    };
    let mut truncated = c(0.0, 0.0);
    for n in 1..=l {
        let mut tau = 1u64;
        let mut hit = false;
        for (r, e) in sieve.factorize(n) {
            if r as u64 == p {
                tau *= 2 * e as u64 + 1 + extra;
                hit = true;
            } else {
                tau *= 2 * e as u64 + 1;
            }
        }
        if !hit {
            tau *= 1 + extra;
        }
        truncated += tau as f64 * pow_neg(n as f64, s);
    }
    let base = cube_ratio(s);
    let ps = pow_neg(p as f64, s);
    let closed_form = match kind {
        SeriesKind::Plain => base,
        SeriesKind::P => 2.0 / (1.0 + ps) * base,
        SeriesKind::P2 => (3.0 - ps) / (1.0 + ps) * base,
    };
    Ok(SeriesRecord {
        truncated,
        closed_form,
    })
}

/// The three contour integrals behind the main terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidueKind {
    /// Square diagonal of the `n / p` block for `j = 1`.
    M22,
    /// Square diagonal of the `n p^2` block for `j = 2`.
    Delta1,
    /// Square diagonal of the `n / p^2` block for `j = 2`.
    Delta3,
}

impl ResidueKind {
    pub const ALL: [ResidueKind; 3] = [ResidueKind::M22, ResidueKind::Delta1, ResidueKind::Delta3];

    /// `X` in the factor `X^{-u}`.
    fn scale(self, p: u64, q: u64) -> f64 {
        let k = 4.0 * PI * PI / q as f64;
        match self {
            ResidueKind::M22 => k * p as f64,
            ResidueKind::Delta1 => k,
            ResidueKind::Delta3 => k * (p * p) as f64,
        }
    }

    /// Local factor at `p` evaluated at `w = 2 + 2it + 2u`.
    fn local(self, p: u64, w: Complex64) -> Complex64 {
        let pw = pow_neg(p as f64, w);
        match self {
            ResidueKind::M22 => 2.0 / (1.0 + pw),
            ResidueKind::Delta1 => c(1.0, 0.0),
            ResidueKind::Delta3 => (3.0 - pw) / (1.0 + pw),
        }
    }

    /// `d/du log local(2 + 2u)` at `u = 0`.
    fn local_log_deriv(self, p: u64) -> f64 {
        let (pf, lp) = (p as f64, (p as f64).ln());
        match self {
            ResidueKind::M22 => 2.0 * lp / (pf * pf + 1.0),
            ResidueKind::Delta1 => 0.0,
            ResidueKind::Delta3 => 2.0 * lp / (pf * pf + 1.0) + 2.0 * lp / (3.0 * pf * pf - 1.0),
        }
    }

    /// The integrand `local * zeta_q(1+2it+2u) zeta^3(w)/zeta(2w) X^{-u} Gamma(1+it+u)^2 e^{u^2} / u`.
    fn integrand(self, p: u64, q: u64, t: f64, u: Complex64) -> Complex64 {
        let it = c(0.0, t);
        let w = 2.0 + 2.0 * it + 2.0 * u;
        let g = gamma_pt(1.0 + it + u);
        self.local(p, w)
            * zeta_q_pt(1.0 + 2.0 * it + 2.0 * u, q)
            * cube_ratio(w)
            * pow_neg(self.scale(p, q), u)
            * g
            * g
            * (u * u).exp()
            / u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResidueMode {
    /// Keep the derivative of the `1 - q^{-s}` factor at the double pole.
    Exact,
    /// Drop it, as the printed main terms do.
    Printed,
}

/// `(pole pair, regular part)` of the residue; the pole pair is the `u = -it` contribution.
fn residue_parts(
    kind: ResidueKind,
    p: u64,
    q: u64,
    t: f64,
    mode: ResidueMode,
) -> (Complex64, Complex64) {
    let qf = q as f64;
    let z = ZetaConstants::get();
    let x = kind.scale(p, q);
    let h2 = kind.local(p, c(2.0, 0.0));
    let half = 0.5 * (1.0 - 1.0 / qf) * h2 * z.cube_ratio();
    if is_zero(t) {
        let mut bracket = -x.ln() + kind.local_log_deriv(p) + z.log_deriv_combination();
        if mode == ResidueMode::Exact {
            bracket += 2.0 * qf.ln() / (qf - 1.0);
        }
        return (c(0.0, 0.0), half * bracket);
    }
    let it = c(0.0, t);
    let pole = half * Complex64::from_polar(1.0, t * x.ln()) * (-(-t * t).exp()) / it;
    let g = gamma_pt(1.0 + it);
    let w = 2.0 + 2.0 * it;
    let regular = kind.local(p, w) * zeta_q_pt(1.0 + 2.0 * it, q) * cube_ratio(w) * g * g;
    (pole, regular)
}

/// Sum of the residues at `u = 0` and `u = -it` (a double pole at `t = 0`).
pub fn residue_closed_form(
    kind: ResidueKind,
    p: u64,
    q: u64,
    t: f64,
    mode: ResidueMode,
) -> ComplexValue {
    let (pole, regular) = residue_parts(kind, p, q, t, mode);
    pole + regular
}

/// `(integral on Re u = 2, integral on Re u = -1/2 + eps)`, each divided by `2 pi i`.
pub fn mellin_parts(
    kind: ResidueKind,
    p: u64,
    q: u64,
    t: f64,
) -> Result<(ComplexValue, ComplexValue)> {
    let f = |u: Complex64| kind.integrand(p, q, t, u);
    let (upper, _, _) = integrate_vertical(f, 2.0, MELLIN_STEP, MELLIN_HALFWIDTH, MELLIN_TOL)?;
    let (lower, _, _) = integrate_vertical(
        f,
        -0.5 + CONTOUR_EPS,
        MELLIN_STEP,
        MELLIN_HALFWIDTH,
        MELLIN_TOL,
    )?;
    Ok((upper, lower))
}

/// The residue as the difference of the two contour integrals.
pub fn mellin_numeric(kind: ResidueKind, p: u64, q: u64, t: f64) -> Result<ComplexValue> {
    let (upper, lower) = mellin_parts(kind, p, q, t)?;
    Ok(upper - lower)
}

/// `B(p^j, q, t)` main part split into `(pole pair, regular)`.
fn b_main(j: u32, p: u64, q: u64, t: f64, mode: ResidueMode) -> (Complex64, Complex64) {
    let (pf, qf) = (p as f64, q as f64);
    let it = c(0.0, t);
    match j {
        1 => {
            let k = (1.0 + 1.0 / pf) * qf / 12.0 * pow_neg(pf, 0.5 + it);
            let (a, b) = residue_parts(ResidueKind::M22, p, q, t, mode);
            (k * a, k * b)
        }
        _ => {
            let k1 = qf / (12.0 * pf);
            let k3 = (1.0 + 1.0 / pf) * qf / 12.0 * pow_neg(pf, 1.0 + 2.0 * it);
            let (a1, b1) = residue_parts(ResidueKind::Delta1, p, q, t, mode);
            let (a3, b3) = residue_parts(ResidueKind::Delta3, p, q, t, mode);
            (k1 * a1 + k3 * a3, k1 * b1 + k3 * b3)
        }
    }
}

fn combine(q: u64, t: f64, b: Complex64, b_dual: Complex64) -> Complex64 {
    let g = gamma_pt(c(1.0, t));
    let phase = Complex64::from_polar(1.0, -2.0 * t * (q as f64 / (4.0 * PI * PI)).ln());
    (b + phase * b_dual) / (g * g)
}

/// Main term assembled from the residues: `Gamma(1+it)^{-2} (B(t) + (q/4 pi^2)^{-2it} B(-t))`.
pub fn main_term_from_residues(
    j: u32,
    p: u64,
    q: u64,
    t: f64,
    mode: ResidueMode,
) -> Result<ComplexValue> {
    check_j(j)?;
    let (a, b) = b_main(j, p, q, t, mode);
    if is_zero(t) {
        return Ok(2.0 * (a + b));
    }
    let (ad, bd) = b_main(j, p, q, -t, mode);
    Ok(combine(q, t, a + b, ad + bd))
}

/// `|Gamma(1+it)^{-2} (P(t) + (q/4 pi^2)^{-2it} P(-t))|` for the pole pairs `P`, which
/// the printed main terms omit.
pub fn pole_pair_residual(j: u32, p: u64, q: u64, t: f64) -> Result<f64> {
    check_j(j)?;
    if is_zero(t) {
        return Ok(0.0);
    }
    let (a, _) = b_main(j, p, q, t, ResidueMode::Printed);
    let (ad, _) = b_main(j, p, q, -t, ResidueMode::Printed);
    Ok(combine(q, t, a, ad).norm())
}

/// `A(p^j, q, t)` rebuilt from traces `Tr(T_n)` through the Hecke relations, block by block.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRoute {
    pub value: ComplexValue,
    /// `B`-blocks at `t`: `(B_1, B_21, B_22)` for `j = 1`, `(B_1, B_2, B_3)` for `j = 2`.
    pub blocks: [ComplexValue; 3],
    /// The square diagonal of `B_1` for `j = 1`, identically zero.
    pub m1_square_diagonal: ComplexValue,
    /// Square-diagonal sums `Delta_2` and `Delta_3` for `j = 2` over the same lattice.
    pub delta2: ComplexValue,
    pub delta3: ComplexValue,
}

fn traces(tables: &[EigenformTable], limit: u64) -> Result<Vec<f64>> {
    let mut tr = vec![0.0; limit as usize + 1];
    for f in tables {
        if f.n_max < limit {
            return Err(Error::InsufficientTable {
                q: f.q,
                have: f.n_max,
                need: limit,
            });
        }
        for (acc, l) in tr.iter_mut().zip(&f.lambda).skip(1) {
            *acc += l;
        }
    }
    Ok(tr)
}

fn blocks(weights: &[Complex64], tr: &[f64], j: u32, p: usize) -> [Complex64; 3] {
    let mut out = [c(0.0, 0.0); 3];
    let n_max = weights.len() - 1;
    for n in 1..=n_max {
        let k = weights[n];
        if j == 1 {
            if n % p == 0 {
                out[1] += k * tr[n * p];
                out[2] += k * tr[n / p];
            } else {
                out[0] += k * tr[n * p];
            }
        } else {
            out[0] += k * tr[n * p * p];
            if n % p == 0 {
                out[1] += k * tr[n];
            }
            if n % (p * p) == 0 {
                out[2] += k * tr[n / (p * p)];
            }
        }
    }
    out
}

/// Trace-route evaluation of `A(p^j, q, t)` on the lattice `n d^2 <= n_cutoff`.
///
/// The tables must reach `p^j n_cutoff`.
pub fn trace_route(
    q: u64,
    tables: &[EigenformTable],
    j: u32,
    p: u64,
    t: f64,
    n_cutoff: u64,
) -> Result<TraceRoute> {
    check_j(j)?;
    check_twist(p, q)?;
    let weights = AfeWeights::with_cutoff(q, t, n_cutoff)?;
    let tr = traces(tables, p.pow(j) * n_cutoff)?;
    let pu = p as usize;
    let b = blocks(weights.weights(), &tr, j, pu);
    let bd = blocks(weights.dual_weights(), &tr, j, pu);
    let sum = |x: &[Complex64; 3]| x[0] + x[1] + x[2];
    let value = weights.prefactor() * sum(&b) + weights.dual_prefactor() * sum(&bd);

    // Square-diagonal sums with the kernel on the same lattice.
    let n = n_cutoff as usize;
    let w = kernel_table(q, t, n_cutoff)?;
    let tau = FactorSieve::new(n * pu).divisor_counts();
    let (pf, qf) = (p as f64, q as f64);
    let it = c(0.0, t);
    let dpow = |d: usize| pow_neg(d as f64, 1.0 + 2.0 * it);
    let mut m1 = c(0.0, 0.0);
    let mut delta2 = c(0.0, 0.0);
    let mut delta3 = c(0.0, 0.0);
    let mut d = 1;
    while d * d <= n {
        if !(d as u64).is_multiple_of(q) {
            let dd = d * d;
            let mut s = 1;
            // k = s^2 with k d^2 <= p N, weight W(4 pi^2 (k/p) d^2 / q).
            while s * s * dd <= n * pu {
                let k = s * s;
                if k % pu == 0 && (k / pu) * dd <= n {
                    let m = k / pu;
                    let mu_sum = if num_integer::gcd(m, pu) == 1 {
                        1.0
                    } else {
                        0.0
                    };
                    m1 += dpow(d)
                        * f64::from(tau[m])
                        * pow_neg(k as f64, 1.0 + it)
                        * w[m * dd]
                        * mu_sum;
                }
                s += 1;
            }
            let mut s = 1;
            while s * s * dd <= n {
                let k = s * s;
                if k % pu == 0 {
                    delta2 += dpow(d) * f64::from(tau[k]) * pow_neg(k as f64, 1.0 + it) * w[k * dd];
                }
                if k * pu * pu * dd <= n {
                    delta3 += dpow(d)
                        * f64::from(tau[k * pu * pu])
                        * pow_neg(k as f64, 1.0 + it)
                        * w[k * pu * pu * dd];
                }
                s += 1;
            }
        }
        d += 1;
    }
    let m1 = m1 * qf / 12.0 * pow_neg(pf, -(0.5 + it));
    let delta2 = delta2 * qf / 12.0;
    let delta3 = delta3 * qf / 12.0 * pow_neg(pf, 1.0 + 2.0 * it);
    Ok(TraceRoute {
        value,
        blocks: b,
        m1_square_diagonal: m1,
        delta2,
        delta3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heckespace::{build_space, eigen_tables};
    use crate::smoothing::truncation_cutoff;

    #[test]
    fn printed_terms_are_conjugate_symmetric() {
        let a = main_term_thm11(2, 101, 0.7);
        let b = main_term_thm11(2, 101, -0.7);
        assert!((a.conj() - b).norm() < 1e-12 * a.norm().max(1.0));
        let a = main_term_thm12(3, 101, 0.5);
        let b = main_term_thm12(3, 101, -0.5);
        assert!((a.conj() - b).norm() < 1e-12 * a.norm().max(1.0));
        assert_eq!(main_term_thm11(2, 1009, 0.0).im, 0.0);
        assert_eq!(main_term_thm12(2, 1009, 0.0).im, 0.0);
    }

    #[test]
    fn residues_reassemble_the_printed_terms() {
        for (p, q) in [(2, 101), (3, 37), (2, 1009)] {
            for t in [0.0, 0.5, 1.0] {
                let a = main_term_from_residues(1, p, q, t, ResidueMode::Printed).unwrap();
                let b = main_term_thm11(p, q, t);
                assert!(
                    (a - b).norm() < 1e-10 * b.norm().max(1.0),
                    "j=1 {p} {q} {t}: {a} {b}"
                );
                let a = main_term_from_residues(2, p, q, t, ResidueMode::Printed).unwrap();
                let b = main_term_thm12(p, q, t);
                assert!(
                    (a - b).norm() < 1e-10 * b.norm().max(1.0),
                    "j=2 {p} {q} {t}: {a} {b}"
                );
                for j in [1, 2] {
                    assert!(pole_pair_residual(j, p, q, t).unwrap() < 1e-10 * b.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn small_t_approaches_the_exact_double_pole() {
        for j in [1, 2] {
            let exact = main_term_from_residues(j, 2, 1009, 0.0, ResidueMode::Exact).unwrap();
            let near = main_term(j, 2, 1009, 1e-4).unwrap();
            assert!(
                (near - exact).norm() < 1e-3 * exact.norm(),
                "j={j}: {near} {exact}"
            );
        }
    }

    #[test]
    fn contour_matches_residue() {
        for kind in ResidueKind::ALL {
            for (p, q, t) in [(2, 101, 0.0), (3, 101, 0.5), (3, 37, 1.0)] {
                let r = residue_closed_form(kind, p, q, t, ResidueMode::Exact);
                let m = mellin_numeric(kind, p, q, t).unwrap();
                assert!((r - m).norm() < 1e-8, "{kind:?} {p} {q} {t}: {r} {m}");
            }
        }
    }

    #[test]
    fn series_limits() {
        let s = c(40.0, 0.0);
        for (kind, lim) in [
            (SeriesKind::Plain, 1.0),
            (SeriesKind::P, 2.0),
            (SeriesKind::P2, 3.0),
        ] {
            let r = tau_square_series(kind, 3, s, 1000).unwrap();
            assert!((r.closed_form.re - lim).abs() < 1e-9);
            assert!((r.truncated - r.closed_form).norm() < 1e-9);
        }
    }

    #[test]
    fn second_moment_sign_change() {
        assert!(second_moment_main(11) < 0.0);
        assert!(second_moment_main(1009) > 0.0);
        let z = second_moment_zero();
        let f = |q: f64| {
            let k = ZetaConstants::get();
            q * ((q / (4.0 * PI * PI)).ln()
                + 2.0 * (3.0 * k.zeta2_logderiv - 2.0 * k.zeta4_logderiv))
        };
        assert!(f(z).abs() < 1e-9 * z);
    }

    #[test]
    fn level_11_moment() {
        let q = 11;
        let tables =
            eigen_tables(&build_space(q).unwrap(), 1, truncation_cutoff(q, 1, 1e-8)).unwrap();
        let a = empirical_moment(q, &tables, 1, 2, 0.0, 1e-8).unwrap();
        // L(1/2, f)^2 lambda_f(2) with L(1/2, f) = 0.2538418609 and lambda_f(2) = -sqrt(2)
        let expected = -0.2538418609f64.powi(2) * 2f64.sqrt();
        assert!((a.re - expected).abs() < 1e-8, "{a}");
        assert!(a.im.abs() < 1e-7);
        let e = empirical_moment(13, &[], 1, 2, 0.0, 1e-8).unwrap();
        assert_eq!(e, c(0.0, 0.0));
        let r = moment_record(13, &[], 1, 2, 0.0, 1e-8).unwrap();
        assert_eq!(r.dim, 0);
        assert!(r.notes.iter().any(|n| n.contains("empty")));
    }

    #[test]
    fn trace_route_reproduces_the_form_sum() {
        let (q, p, t) = (37, 3, 0.5);
        let n = truncation_cutoff(q, 1, 1e-4);
        let tables = eigen_tables(&build_space(q).unwrap(), 1, p * p * n).unwrap();
        let weights = AfeWeights::with_cutoff(q, t, n).unwrap();
        for j in [1, 2] {
            let a = empirical_with_weights(&weights, &tables, j, p).unwrap();
            let r = trace_route(q, &tables, j, p, t, n).unwrap();
            assert!((a - r.value).norm() < 1e-9, "j={j}: {a} {}", r.value);
            assert_eq!(r.m1_square_diagonal, c(0.0, 0.0));
            assert!((r.delta2 - r.delta3 / p as f64).norm() < 1e-12 * r.delta3.norm().max(1.0));
        }
    }
}
