use std::process::{Command, Output};

fn lmoments(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmoments"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn mainterm_prints_json() {
    let o = lmoments(&["mainterm", "--q", "1009", "--p", "2", "--j", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(v["re"].as_f64().unwrap() < 0.0);
    assert_eq!(v["im"].as_f64().unwrap(), 0.0);
}

#[test]
fn moment_record_for_level_11() {
    let o = lmoments(&[
        "moment", "--q", "11", "--p", "2", "--j", "1", "--tol", "1e-8",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["dim"], 1);
    assert!((v["empirical"][0].as_f64().unwrap() + 0.0911258).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        lmoments(&["moment", "--q", "12", "--p", "2", "--j", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lmoments(&["moment", "--q", "11", "--p", "2", "--j", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lmoments(&["moment", "--q", "11", "--p", "2", "--j", "1", "--tol", "0.1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lmoments(&["verify", "--suite", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(lmoments(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_deterministic_csv_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = lmoments(&[
            "sweep",
            "--qmin",
            "11",
            "--qmax",
            "40",
            "--p",
            "2,3",
            "--j",
            "1,2",
            "--t",
            "0,-0.5",
            "--cache-dir",
            cache.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        std::fs::read_to_string(out).unwrap()
    };
    let first = run("a.csv");
    let second = run("b.csv");
    assert_eq!(first, second);
    assert!(first.starts_with("q,p,j,t,dim,"));
    assert_eq!(first.lines().count(), 1 + 8 * 8);
    assert!(cache.join("eigen_q37_seed0.json").exists());
}

#[test]
fn sweep_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "q_min = 11\nq_max = 20\np_list = [2]\nj_list = [1]\nt_list = [0.0]\n",
    )
    .unwrap();
    let o = lmoments(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1 + 4);
    std::fs::write(&cfg, "q_min = 11\nq_max = 20\n").unwrap();
    assert_eq!(
        lmoments(&["sweep", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn eigendata_writes_cache_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q37.json");
    let o = lmoments(&[
        "eigendata",
        "--q",
        "37",
        "--n-max",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["dim"], 2);
    assert_eq!(v["format_version"], 1);
}

#[test]
fn verify_special_passes() {
    let o = lmoments(&["verify", "--suite", "special"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_smoothing_reports_failures_with_exit_1() {
    let o = lmoments(&["verify", "--suite", "smoothing"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], false);
}
