//! Eigen-data persistence, sweep orchestration and reporting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::heckespace::{
    build_space, default_n_max, eigen_tables, genus_oracle, lambda_extend,
    sign_of_functional_equation, EigenformTable,
};
use crate::lvalue::{l_central_oracle, l_squared_afe, AfeWeights};
use crate::moments::{
    main_term, mellin_numeric, moment_record_with_weights, residue_closed_form, tau_square_series,
    trace_route, MomentRecord, ResidueKind, ResidueMode, SeriesKind,
};
use crate::smoothing::{truncation_cutoff, wt_eval, KernelParams};
use crate::special::{gamma, is_prime, primes_up_to, zeta, zeta_and_derivative, ComplexValue};

pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Sweep CSV header.
pub const SWEEP_COLUMNS: [&str; 15] = [
    "q",
    "p",
    "j",
    "t",
    "dim",
    "empirical_re",
    "empirical_im",
    "main_re",
    "main_im",
    "ratio_re",
    "ratio_im",
    "abs_residual",
    "n_cutoff",
    "wall_ms",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedForm {
    pub index: usize,
    pub sign: i8,
    /// `(p, lambda(p))` for primes `p <= n_max`.
    pub lambda: Vec<(u64, f64)>,
}

/// On-disk eigenvalue data for one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCacheFile {
    pub format_version: u32,
    pub q: u64,
    pub dim: usize,
    pub seed: u64,
    pub n_max: u64,
    pub forms: Vec<CachedForm>,
}

impl EigenCacheFile {
    pub fn from_tables(q: u64, seed: u64, n_max: u64, tables: &[EigenformTable]) -> Self {
        let forms = tables
            .iter()
            .map(|t| CachedForm {
                index: t.index,
                sign: t.sign,
                lambda: t
                    .primes
                    .iter()
                    .copied()
                    .filter(|&(p, _)| p <= n_max)
                    .collect(),
            })
            .collect();
        Self {
            format_version: CACHE_FORMAT_VERSION,
            q,
            dim: tables.len(),
            seed,
            n_max,
            forms,
        }
    }

    /// Tables extended to `n_max`; the eigenvector residual is not persisted and reads as 0.
    pub fn tables(&self) -> Result<Vec<EigenformTable>> {
        self.forms
            .iter()
            .map(|f| {
                let mut t = EigenformTable::from_primes(
                    self.q,
                    f.index,
                    f.lambda.clone(),
                    self.n_max,
                    0.0,
                )?;
                t.sign = f.sign;
                Ok(t)
            })
            .collect()
    }

    /// JSON with sorted keys and every float written with 17 significant digits.
    pub fn to_canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut out = String::new();
        write_canonical(&value, &mut out);
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_canonical_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file = Self::from_json(&text).map_err(|e| Error::Cache {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if file.format_version != CACHE_FORMAT_VERSION {
            return Err(Error::Cache {
                path: path.to_path_buf(),
                reason: format!(
                    "format version {} (expected {CACHE_FORMAT_VERSION})",
                    file.format_version
                ),
            });
        }
        Ok(file)
    }
}

fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("checked f64");
                let _ = write!(out, "{x:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push('{');
            for (i, (k, item)) in sorted.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(item, out);
            }
            out.push('}');
        }
    }
}

/// Cache path for a level and seed inside `dir`.
pub fn cache_path(dir: &Path, q: u64, seed: u64) -> PathBuf {
    dir.join(format!("eigen_q{q}_seed{seed}.json"))
}

fn check_level(q: u64) -> Result<()> {
    if !is_prime(q) {
        return Err(Error::UnsupportedLevel(q));
    }
    Ok(())
}

/// Eigenvalue tables for level `q` reaching `n_max`, through the cache when one is given.
pub fn load_or_build(
    q: u64,
    n_max: u64,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<Vec<EigenformTable>> {
    check_level(q)?;
    if let Some(dir) = cache_dir {
        let path = cache_path(dir, q, seed);
        if path.exists() {
            let file = EigenCacheFile::load(&path)?;
            if file.seed == seed && file.n_max >= n_max {
                let tables = file.tables()?;
                return tables.iter().map(|t| lambda_extend(t, n_max)).collect();
            }
        }
        let tables = eigen_tables(&build_space(q)?, seed, n_max)?;
        EigenCacheFile::from_tables(q, seed, n_max, &tables).save(&path)?;
        return Ok(tables);
    }
    eigen_tables(&build_space(q)?, seed, n_max)
}

/// Build the tables for `q` and write the cache file to `out`.
pub fn cmd_eigendata(q: u64, n_max: Option<u64>, seed: u64, out: &Path) -> Result<EigenCacheFile> {
    check_level(q)?;
    let n_max = n_max.unwrap_or_else(|| default_n_max(q));
    let tables = eigen_tables(&build_space(q)?, seed, n_max)?;
    let file = EigenCacheFile::from_tables(q, seed, n_max, &tables);
    file.save(out)?;
    Ok(file)
}

/// Table length needed for moments at `(q, p^j, tol)`.
pub fn required_n_max(q: u64, pj_max: u64, tol: f64) -> u64 {
    truncation_cutoff(q, 1, tol)
        .max(pj_max)
        .max(default_n_max(q))
}

/// One moment record, with tables from the cache when one is given.
pub fn cmd_moment(
    q: u64,
    p: u64,
    j: u32,
    t: f64,
    tol: f64,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<MomentRecord> {
    check_level(q)?;
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("p = {p} is not prime")));
    }
    check_tol(tol)?;
    let n_max = required_n_max(q, p.pow(j), tol);
    let tables = load_or_build(q, n_max, seed, cache_dir)?;
    let weights = AfeWeights::new(q, t, tol)?;
    moment_record_with_weights(&weights, &tables, j, p)
}

/// Closed-form main term of `A(p^j, q, t)`.
pub fn cmd_mainterm(p: u64, q: u64, j: u32, t: f64) -> Result<ComplexValue> {
    if p == q {
        return Err(Error::InvalidArgument(format!(
            "twist prime {p} equals the level"
        )));
    }
    main_term(j, p, q, t)
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-12..=1e-4).contains(&tol) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tol must lie in [1e-12, 1e-4], got {tol}"
        )))
    }
}

fn default_tol() -> f64 {
    1e-4
}

fn default_threads() -> usize {
    1
}

fn default_j() -> Vec<u32> {
    vec![1]
}

fn default_t() -> Vec<f64> {
    vec![0.0]
}

/// A `(q, p, j, t)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub q_min: u64,
    pub q_max: u64,
    pub p_list: Vec<u64>,
    #[serde(default = "default_j")]
    pub j_list: Vec<u32>,
    #[serde(default = "default_t")]
    pub t_list: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub out_path: Option<PathBuf>,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Record wall-clock times (breaks byte-identical output).
    #[serde(default)]
    pub timing: bool,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Reject invalid grids; return warnings for twist primes outside the asymptotic range.
    pub fn validate(&self) -> Result<Vec<String>> {
        check_tol(self.tol)?;
        if self.q_min > self.q_max {
            return Err(Error::InvalidArgument(format!(
                "q_min {} exceeds q_max {}",
                self.q_min, self.q_max
            )));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be positive".into()));
        }
        if self.p_list.is_empty() || self.j_list.is_empty() || self.t_list.is_empty() {
            return Err(Error::InvalidArgument(
                "p_list, j_list and t_list must be non-empty".into(),
            ));
        }
        for &p in &self.p_list {
            if !is_prime(p) {
                return Err(Error::InvalidArgument(format!("p = {p} is not prime")));
            }
        }
        for &j in &self.j_list {
            if j != 1 && j != 2 {
                return Err(Error::InvalidArgument(format!("j must be 1 or 2, got {j}")));
            }
        }
        if let Some(t) = self.t_list.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t = {t} is not finite")));
        }
        let mut warnings = Vec::new();
        let qf = self.q_min as f64;
        for &p in &self.p_list {
            for &j in &self.j_list {
                let exponent = if j == 1 { 1.0 / 55.0 } else { 1.0 / 110.0 };
                if (p as f64) >= qf.powf(exponent) {
                    warnings.push(format!(
                        "j = {j}: p = {p} is not below q_min^{exponent:.5} = {:.4}; the main term is outside its proven range",
                        qf.powf(exponent)
                    ));
                }
            }
        }
        Ok(warnings)
    }

    /// Levels in the sweep, in increasing order.
    pub fn levels(&self) -> Vec<u64> {
        primes_up_to(self.q_max)
            .into_iter()
            .filter(|&q| q >= self.q_min.max(11))
            .collect()
    }
}

/// One sweep row; `error` carries the failure of the unit that should have produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: u64,
    pub p: u64,
    pub j: u32,
    pub t: f64,
    pub dim: usize,
    pub empirical: ComplexValue,
    pub main_term: ComplexValue,
    pub ratio: Option<ComplexValue>,
    pub abs_residual: f64,
    pub n_cutoff: u64,
    pub wall_ms: u64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(q: u64, p: u64, j: u32, t: f64, error: String) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        Self {
            q,
            p,
            j,
            t,
            dim: 0,
            empirical: nan,
            main_term: nan,
            ratio: None,
            abs_residual: f64::NAN,
            n_cutoff: 0,
            wall_ms: 0,
            error: Some(error),
        }
    }

    fn fields(&self) -> Vec<String> {
        let f = |x: f64| {
            if x.is_nan() {
                String::new()
            } else if x == 0.0 {
                // One spelling for both signed zeros.
                "0".to_string()
            } else {
                x.to_string()
            }
        };
        let (rr, ri) = self
            .ratio
            .map_or((String::new(), String::new()), |r| (f(r.re), f(r.im)));
        vec![
            self.q.to_string(),
            self.p.to_string(),
            self.j.to_string(),
            self.t.to_string(),
            self.dim.to_string(),
            f(self.empirical.re),
            f(self.empirical.im),
            f(self.main_term.re),
            f(self.main_term.im),
            rr,
            ri,
            f(self.abs_residual),
            self.n_cutoff.to_string(),
            self.wall_ms.to_string(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

fn sweep_level(config: &SweepConfig, q: u64) -> Vec<SweepRow> {
    let started = Instant::now();
    let grid: Vec<(u64, u32, f64)> = config
        .p_list
        .iter()
        .flat_map(|&p| {
            config
                .j_list
                .iter()
                .flat_map(move |&j| config.t_list.iter().map(move |&t| (p, j, t)))
        })
        .collect();
    let pj_max = grid
        .iter()
        .filter(|g| g.0 != q)
        .map(|&(p, j, _)| p.pow(j))
        .max()
        .unwrap_or(1);
    let n_max = required_n_max(q, pj_max, config.tol);
    let tables = match load_or_build(q, n_max, config.seed, config.cache_dir.as_deref()) {
        Ok(t) => t,
        Err(e) => {
            return grid
                .iter()
                .map(|&(p, j, t)| SweepRow::failed(q, p, j, t, e.to_string()))
                .collect()
        }
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &config.t_list {
        let weights = AfeWeights::new(q, t, config.tol);
        for &(p, j, _) in grid.iter().filter(|g| g.2.to_bits() == t.to_bits()) {
            let record = weights.as_ref().map_err(|e| e.to_string()).and_then(|w| {
                moment_record_with_weights(w, &tables, j, p).map_err(|e| e.to_string())
            });
            let row = match record {
                Ok(r) => SweepRow {
                    q,
                    p,
                    j,
                    t,
                    dim: r.dim,
                    empirical: r.empirical,
                    main_term: r.main_term,
                    ratio: r.ratio,
                    abs_residual: r.abs_residual,
                    n_cutoff: r.n_cutoff,
                    wall_ms: 0,
                    error: None,
                },
                Err(e) => SweepRow::failed(q, p, j, t, e),
            };
            rows.push(row);
        }
    }
    if config.timing {
        let ms = started.elapsed().as_millis() as u64;
        for r in &mut rows {
            r.wall_ms = ms;
        }
    }
    rows
}

/// Run the sweep; rows are sorted by `(j, p, t, q)`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    let warnings = config.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let levels = config.levels();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        levels
            .par_iter()
            .map(|&q| {
                log::info!("level {q}");
                sweep_level(config, q)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    rows.sort_by(|a, b| {
        (a.j, a.p)
            .cmp(&(b.j, b.p))
            .then(a.t.total_cmp(&b.t))
            .then(a.q.cmp(&b.q))
    });
    Ok(SweepOutcome { rows, warnings })
}

/// The sweep as CSV text.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Run the sweep and write the CSV to the configured path.
pub fn cmd_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    let outcome = run_sweep(config)?;
    let csv = sweep_csv(&outcome.rows)?;
    match &config.out_path {
        Some(path) => {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, csv)?;
        }
        None => print!("{csv}"),
    }
    Ok(outcome)
}

/// Result of one invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Special,
    Smoothing,
    Hecke,
    Lvalue,
    Moments,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "special" => Suite::Special,
            "smoothing" => Suite::Smoothing,
            "hecke" => Suite::Hecke,
            "lvalue" => Suite::Lvalue,
            "moments" => Suite::Moments,
            "all" => Suite::All,
            other => return Err(Error::InvalidArgument(format!("unknown suite {other}"))),
        })
    }
}

struct Checks {
    suite: &'static str,
    list: Vec<Check>,
}

impl Checks {
    fn new(suite: &'static str) -> Self {
        Self {
            suite,
            list: Vec::new(),
        }
    }

    fn bound(&mut self, name: &str, value: Result<f64>, limit: f64) {
        let (passed, detail) = match value {
            Ok(v) => (v <= limit, format!("{v:.3e} <= {limit:.1e}")),
            Err(e) => (false, e.to_string()),
        };
        self.list.push(Check {
            suite: self.suite.into(),
            name: name.into(),
            passed,
            detail,
        });
    }

    fn flag(&mut self, name: &str, value: Result<bool>, detail: String) {
        let (passed, detail) = match value {
            Ok(v) => (v, detail),
            Err(e) => (false, e.to_string()),
        };
        self.list.push(Check {
            suite: self.suite.into(),
            name: name.into(),
            passed,
            detail,
        });
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn verify_special() -> Vec<Check> {
    let mut ck = Checks::new("special");
    let pi = std::f64::consts::PI;
    ck.bound(
        "zeta(2) = pi^2/6",
        zeta(c(2.0, 0.0)).map(|z| (z.re - pi * pi / 6.0).abs()),
        1e-13,
    );
    ck.bound(
        "zeta(4) = pi^4/90",
        zeta(c(4.0, 0.0)).map(|z| (z.re - pi.powi(4) / 90.0).abs()),
        1e-13,
    );
    ck.bound(
        "gamma(1/2) = sqrt(pi)",
        gamma(c(0.5, 0.0)).map(|g| (g.re - pi.sqrt()).abs()),
        1e-13,
    );
    let s = c(0.3, 2.0);
    ck.bound(
        "gamma reflection",
        gamma(s).and_then(|a| gamma(1.0 - s).map(|b| (a * b - pi / (pi * s).sin()).norm())),
        1e-11,
    );
    let euler = || -> Result<f64> {
        let mut prod = 1.0;
        for p in primes_up_to(100_000) {
            prod /= 1.0 - (p as f64).powi(-3);
        }
        Ok((zeta(c(3.0, 0.0))?.re - prod).abs())
    };
    ck.bound("Euler product at s = 3", euler(), 1e-4);
    let fd = || -> Result<f64> {
        let h = 1e-5;
        let s = c(2.0, 1.0);
        let (_, d) = zeta_and_derivative(s)?;
        let num = (zeta(s + h)? - zeta(s - h)?) / (2.0 * h);
        Ok((d - num).norm())
    };
    ck.bound("zeta' against a central difference", fd(), 1e-8);
    ck.list
}

fn verify_smoothing() -> Vec<Check> {
    let mut ck = Checks::new("smoothing");
    let tol = 1e-10;
    for t in [0.0, 1.5] {
        let params = KernelParams::new(t, tol);
        let small = || -> Result<f64> {
            let g = gamma(c(1.0, t))?;
            let mut k = 0.0f64;
            for y in [1e-6, 1e-4, 1e-2, 0.1] {
                k = k.max((wt_eval(&params, y)? - g * g).norm() / f64::powf(y, 0.9));
            }
            Ok(k)
        };
        ck.bound(
            &format!("small-Y law at t = {t}: max |W - Gamma^2| / Y^0.9"),
            small(),
            10.0,
        );
        let conj = || -> Result<f64> {
            let a = wt_eval(&params, 0.7)?;
            let b = wt_eval(&KernelParams::new(-t, tol), 0.7)?;
            Ok((a.conj() - b).norm())
        };
        ck.bound(&format!("conjugation at t = {t}"), conj(), 1e-10);
        let abscissa = || -> Result<f64> {
            let a = wt_eval(&params, 3.0)?;
            let b = wt_eval(&params.with_abscissa(1.0), 3.0)?;
            Ok((a - b).norm())
        };
        ck.bound(
            &format!("abscissa independence at t = {t}"),
            abscissa(),
            2.0 * tol,
        );
    }
    let params = KernelParams::new(0.0, tol);
    for y in [100.0, 400.0, 800.0] {
        let v = wt_eval(&params, y).map(|w| w.norm().ln() + f64::sqrt(y));
        ck.bound(&format!("large-Y law log|W_0({y})| + sqrt(Y)"), v, 0.0);
    }
    ck.list
}

fn verify_hecke() -> Vec<Check> {
    let mut ck = Checks::new("hecke");
    let dims = || -> Result<bool> {
        for q in primes_up_to(101).into_iter().filter(|&q| q >= 11) {
            if build_space(q)?.dim() as u64 != genus_oracle(q) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    ck.flag(
        "dimension equals genus for 11 <= q <= 101",
        dims(),
        "all levels".into(),
    );
    for q in [11u64, 37, 101] {
        let tables = eigen_tables_for(q, 400);
        let hecke = tables.as_ref().map_err(clone_err).map(|ts| {
            let mut worst = 0.0f64;
            for f in ts {
                for m in 1..=20 {
                    for n in 1..=20 {
                        worst = worst.max(f.hecke_defect(m, n).unwrap_or(f64::INFINITY));
                    }
                }
            }
            worst
        });
        ck.bound(&format!("Hecke relations at q = {q}"), hecke, 1e-8);
        let deligne = tables.as_ref().map_err(clone_err).map(|ts| {
            ts.iter()
                .map(|f| f.deligne_excess())
                .fold(f64::NEG_INFINITY, f64::max)
        });
        ck.bound(&format!("Deligne bound at q = {q}"), deligne, 1e-6);
        let signs = tables.as_ref().map_err(clone_err).map(|ts| {
            ts.iter().all(|f| {
                let lq = f.lambda(q).unwrap_or(f64::NAN);
                let expect = if lq * (q as f64).sqrt() > 0.0 { 1 } else { -1 };
                sign_of_functional_equation(f)
                    .map(|s| s == expect && s == f.sign)
                    .unwrap_or(false)
            })
        });
        ck.flag(
            &format!("sign equals sqrt(q) lambda(q) at q = {q}"),
            signs,
            "all forms".into(),
        );
    }
    ck.list
}

fn clone_err(e: &Error) -> Error {
    Error::InvalidArgument(e.to_string())
}

fn eigen_tables_for(q: u64, n: u64) -> Result<Vec<EigenformTable>> {
    eigen_tables(&build_space(q)?, 1, n)
}

fn verify_lvalue() -> Vec<Check> {
    let mut ck = Checks::new("lvalue");
    let tol = 1e-8;
    for q in [11u64, 37] {
        let tables = eigen_tables_for(q, truncation_cutoff(q, 1, tol));
        let cross = tables.as_ref().map_err(clone_err).and_then(|ts| {
            let mut worst = 0.0f64;
            for f in ts {
                let l = l_central_oracle(f, 1e-12)?;
                let v = l_squared_afe(f, 0.0, tol)?.value;
                worst = worst.max((v - l * l).norm());
            }
            Ok(worst)
        });
        ck.bound(
            &format!("AFE against the central oracle at q = {q}"),
            cross,
            2e-6,
        );
        let conj = tables.as_ref().map_err(clone_err).and_then(|ts| {
            let mut worst = 0.0f64;
            for f in ts {
                let a = l_squared_afe(f, 0.8, tol)?.value;
                let b = l_squared_afe(f, -0.8, tol)?.value;
                worst = worst.max((a.conj() - b).norm());
            }
            Ok(worst)
        });
        ck.bound(&format!("conjugation in t at q = {q}"), conj, 1e-9);
    }
    ck.list
}

fn verify_moments() -> Vec<Check> {
    let mut ck = Checks::new("moments");
    for kind in ResidueKind::ALL {
        for (p, q) in [(2u64, 101u64), (3, 37)] {
            for t in [0.0, 0.5, 1.0] {
                let v = mellin_numeric(kind, p, q, t)
                    .map(|m| (m - residue_closed_form(kind, p, q, t, ResidueMode::Exact)).norm());
                ck.bound(
                    &format!("residue against contour {kind:?} (p, q, t) = ({p}, {q}, {t})"),
                    v,
                    1e-8,
                );
            }
        }
    }
    for kind in [SeriesKind::Plain, SeriesKind::P, SeriesKind::P2] {
        let primes: &[u64] = if kind == SeriesKind::Plain {
            &[2]
        } else {
            &[2, 3, 5]
        };
        for &p in primes {
            for s in [c(2.0, 0.0), c(2.0, 2.0)] {
                let v = tau_square_series(kind, p, s, 100_000)
                    .map(|r| (r.truncated - r.closed_form).norm());
                let label = match kind {
                    SeriesKind::Plain => format!("divisor series {kind:?} at L = 1e5, s = {s}"),
                    _ => format!("divisor series {kind:?} at L = 1e5, p = {p}, s = {s}"),
                };
                ck.bound(&label, v, 1e-6);
            }
        }
    }
    for (p, q, t) in [(2u64, 101u64, 0.0), (3, 37, 0.5)] {
        let run = || -> Result<(f64, f64, f64)> {
            let n = truncation_cutoff(q, 1, 1e-4);
            let tables = eigen_tables_for(q, p * p * n)?;
            let weights = AfeWeights::with_cutoff(q, t, n)?;
            let mut worst = (0.0f64, 0.0f64, 0.0f64);
            for j in [1, 2] {
                let route = trace_route(q, &tables, j, p, t, n)?;
                let direct = crate::moments::empirical_with_weights(&weights, &tables, j, p)?;
                worst.0 = worst.0.max((route.value - direct).norm());
                worst.1 = worst.1.max(route.m1_square_diagonal.norm());
                worst.2 = worst.2.max((route.delta2 - route.delta3 / p as f64).norm());
            }
            Ok(worst)
        };
        let r = run();
        let label = format!("(p, q, t) = ({p}, {q}, {t})");
        ck.bound(
            &format!("trace route reproduces the form sum {label}"),
            r.as_ref().map(|x| x.0).map_err(clone_err),
            1e-7,
        );
        ck.bound(
            &format!("square diagonal of B_1 vanishes {label}"),
            r.as_ref().map(|x| x.1).map_err(clone_err),
            1e-9,
        );
        ck.bound(
            &format!("Delta_2 = Delta_3 / p {label}"),
            r.as_ref().map(|x| x.2).map_err(clone_err),
            1e-9,
        );
    }
    ck.list
}

/// Run the invariant suites.
pub fn cmd_verify(suite: Suite) -> VerifyReport {
    let mut checks = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Special {
        checks.extend(verify_special());
    }
    if all || suite == Suite::Smoothing {
        checks.extend(verify_smoothing());
    }
    if all || suite == Suite::Hecke {
        checks.extend(verify_hecke());
    }
    if all || suite == Suite::Lvalue {
        checks.extend(verify_lvalue());
    }
    if all || suite == Suite::Moments {
        checks.extend(verify_moments());
    }
    let passed = checks.iter().all(|c| c.passed);
    VerifyReport { passed, checks }
}
