//! End-to-end checks through the public API.

use lmoments::harness::{cache_path, load_or_build, EigenCacheFile};
use lmoments::heckespace::{build_space, eigen_tables};
use lmoments::lvalue::AfeWeights;
use lmoments::moments::{empirical_with_weights, exchange_identity, moment_record_with_weights};
use lmoments::smoothing::truncation_cutoff;
use proptest::prelude::*;

#[test]
fn cache_is_reused_and_extended() {
    let dir = tempfile::tempdir().unwrap();
    let a = load_or_build(37, 300, 3, Some(dir.path())).unwrap();
    let path = cache_path(dir.path(), 37, 3);
    let stored = std::fs::read_to_string(&path).unwrap();
    let b = load_or_build(37, 200, 3, Some(dir.path())).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stored);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(&x.lambda[..=200], &y.lambda[..]);
    }
    let c = load_or_build(37, 600, 3, Some(dir.path())).unwrap();
    assert_eq!(c[0].n_max, 600);
    assert_eq!(EigenCacheFile::load(&path).unwrap().n_max, 600);
}

#[test]
fn corrupt_cache_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(cache_path(dir.path(), 11, 1), "{not json").unwrap();
    assert!(matches!(
        load_or_build(11, 100, 1, Some(dir.path())),
        Err(lmoments::Error::Cache { .. })
    ));
}

#[test]
fn exchange_with_an_empty_family() {
    let q = 101;
    let n = truncation_cutoff(q, 1, 1e-4);
    let tables_q = eigen_tables(&build_space(q).unwrap(), 1, n).unwrap();
    let r = exchange_identity(13, q, &tables_q, &[], 1e-4).unwrap();
    let w = AfeWeights::new(q, 0.0, 1e-4).unwrap();
    let direct = empirical_with_weights(&w, &tables_q, 1, 13).unwrap();
    assert_eq!(r.lhs, direct.re);
}

#[test]
fn moment_records_flag_the_range() {
    let q = 37;
    let n = truncation_cutoff(q, 1, 1e-4);
    let tables = eigen_tables(&build_space(q).unwrap(), 1, n).unwrap();
    let w = AfeWeights::new(q, 0.3, 1e-4).unwrap();
    let r = moment_record_with_weights(&w, &tables, 2, 3).unwrap();
    assert_eq!((r.q, r.p, r.j, r.dim), (37, 3, 2, 2));
    assert!(!r.notes.is_empty());
    assert!((r.abs_residual - (r.empirical - r.main_term).norm()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn canonical_json_round_trips_any_float(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..20)) {
        let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];
        let lambda: Vec<(u64, f64)> = primes.iter().copied().zip(values).collect();
        let file = EigenCacheFile {
            format_version: 1,
            q: 11,
            dim: 1,
            seed: 0,
            n_max: 71,
            forms: vec![lmoments::harness::CachedForm { index: 0, sign: 1, lambda }],
        };
        let text = file.to_canonical_json().unwrap();
        let back = EigenCacheFile::from_json(&text).unwrap();
        for (a, b) in file.forms[0].lambda.iter().zip(&back.forms[0].lambda) {
            prop_assert_eq!(a.1.to_bits(), b.1.to_bits());
        }
        prop_assert_eq!(back.to_canonical_json().unwrap(), text);
    }
}
