use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn weakminty(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakminty"))
        .args(args)
        .env("WEAKMINTY_THREADS", "1")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config_path(name: &str) -> String {
    format!("{}/../../configs/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn certify_skew_operator() {
    let o = weakminty(&["certify", "--matrix", "[[0,1],[-1,0]]", "--rho", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next(), Some("certified"));

    let o = weakminty(&["certify", "--matrix", "[[0,1],[-1,0]]", "--rho", "0.1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("not certified"));

    let o = weakminty(&["certify", "--matrix", "[[-0.1,1],[-1,-0.1]]", "--rho", "-0.2"]);
    assert_eq!(stdout(&o).lines().next(), Some("certified"));
}

#[test]
fn missing_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = weakminty(&["run", "missing.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_1() {
    for args in [&["frobnicate"][..], &["run"], &["reproduce", "fig9"], &["list-algorithms", "--bogus"], &[]] {
        let o = weakminty(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = stderr(&o);
        assert!(err.contains("Usage") || err.contains("--help"), "{args:?}: {err}");
    }
    assert_eq!(weakminty(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_config_lists_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"name": "bad", "problem": {"name": "global-forsaken"}, "algorithms": ["bc-seg+"],
            "n_iters": 10, "n_seeds": 0}"#,
    )
    .unwrap();
    let o = weakminty(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("n_seeds") && err.contains("algorithms[0]"), "{err}");
}

#[test]
fn list_algorithms_names_every_method() {
    let o = weakminty(&["list-algorithms"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for id in ["eg+", "seg", "sf-eg+", "pseg", "p1seg+", "p2seg+", "sf-peg+", "ceg+", "bc-seg+", "bc-pseg+", "np-pdeg"] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(id)), "{id}");
    }
}

#[test]
fn reproduce_matches_run_byte_for_byte() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = ["--iters", "2000", "--seeds", "3"];
    let o = weakminty(&[&["reproduce", "fig2-left", "--out", a.path().to_str().unwrap()][..], &flags].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let path = config_path("fig2-left");
    let o = weakminty(&[&["run", &path, "--out", b.path().to_str().unwrap()][..], &flags].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let (fa, fb) = (files(&a.path().join("fig2-left")), files(&b.path().join("fig2-left")));
    assert_eq!(fa.len(), 8);
    assert!(fa.iter().any(|(n, _)| n == "bc-seg+_fz-norm.csv"));
    assert!(fa.iter().any(|(n, _)| n == "fig2-left.svg"));
    assert_eq!(fa, fb);
}

#[test]
fn format_flag_selects_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = weakminty(&["reproduce", "fig3", "--out", out, "--iters", "200", "--seeds", "2", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = files(&dir.path().join("fig3")).into_iter().map(|f| f.0).collect();
    assert!(names.iter().all(|n| n.ends_with(".csv") || n == "summary.json"), "{names:?}");
    let csv = fs::read_to_string(dir.path().join("fig3/p1seg+_gamma=0.5_dist.csv")).unwrap();
    assert!(csv.starts_with("k,mean,median,p10,p90\n"));
}

#[test]
fn strict_mode_exits_2_on_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let flags = ["--out", out, "--iters", "100000", "--seeds", "2", "--format", "csv"];
    let o = weakminty(&[&["reproduce", "fig2-left", "--strict"][..], &flags].concat());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("fig2-left/seg"));
    let o = weakminty(&[&["reproduce", "fig2-left"][..], &flags].concat());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn check_conditions_reports_json() {
    let constants = r#"{"L_F": 1, "L_F_hat": 1, "sigma_f": 0.1, "rho": -0.1, "gamma": 0.5,
        "schedule": {"alpha": {"kind": "harmonic", "alpha0": 0.05555555555555555, "c": 100}},
        "dist0_sq": 2.0}"#;
    let o = weakminty(&["check-conditions", constants]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = reports.as_array().unwrap().iter().map(|r| r["theorem"].as_str().unwrap()).collect();
    assert_eq!(names, ["bc-seg+ rate", "bc-pseg+ rate", "seg+ affine rate"]);
    assert_eq!(reports[0]["satisfied"], true);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    fs::write(&file, constants).unwrap();
    let o = weakminty(&["check-conditions", file.to_str().unwrap(), "--theorem", "bc-seg+-as", "--r", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(reports[0]["theorem"], "bc-seg+ almost sure");

    let o = weakminty(&["check-conditions", file.to_str().unwrap(), "--theorem", "np-pdeg"]);
    assert_eq!(o.status.code(), Some(1));
    let o = weakminty(&["check-conditions", r#"{"L_F": 1}"#]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_weakminty"))
        .arg("list-algorithms")
        .env("WEAKMINTY_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("WEAKMINTY_THREADS"));
}
