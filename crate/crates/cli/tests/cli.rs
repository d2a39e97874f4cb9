use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_densify");

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn densify(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_clear().output().expect("binary runs")
}

fn run_in(out: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    densify(&all)
}

/// Every output file except wall-clock timings.
fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timings.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_thread_invariant(args: &[&str]) {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("t1");
    let four = tmp.path().join("t4");
    let mut a = args.to_vec();
    a.extend(["--threads", "1"]);
    let o = run_in(&one, &a);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    let mut b = args.to_vec();
    b.extend(["--threads", "4"]);
    let o = run_in(&four, &b);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    let (x, y) = (artifacts(&one), artifacts(&four));
    assert!(!x.is_empty());
    assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>());
    for (name, bytes) in &x {
        assert!(bytes == &y[name], "{args:?}: {name} differs between 1 and 4 threads");
    }
}

fn check_golden(name: &str) {
    let tmp = tempfile::tempdir().unwrap();
    let config = fixtures().join(format!("{name}.json"));
    let o = run_in(tmp.path(), &[name, "--config", config.to_str().unwrap(), "--threads", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let produced = artifacts(tmp.path());
    let expected_dir = golden().join(name);
    let expected: Vec<String> = std::fs::read_dir(&expected_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(!expected.is_empty());
    for file in expected {
        let want = std::fs::read(expected_dir.join(&file)).unwrap();
        let got = produced.get(&file).unwrap_or_else(|| panic!("{name}: {file} not produced"));
        assert!(got == &want, "{name}: {file} differs from the golden copy");
    }
}

#[test]
fn golden_coverage() {
    check_golden("coverage");
}

#[test]
fn golden_optimize() {
    check_golden("optimize");
}

#[test]
fn golden_ue() {
    check_golden("ue");
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let f = fixtures();
    let cfg = |n: &str| f.join(format!("{n}.json")).to_string_lossy().into_owned();
    let (cov, opt, ue) = (cfg("coverage"), cfg("optimize"), cfg("ue"));
    assert_thread_invariant(&["coverage", "--config", &cov]);
    assert_thread_invariant(&["optimize", "--config", &opt]);
    assert_thread_invariant(&["optimize", "--config", &opt, "--algorithm", "hill"]);
    assert_thread_invariant(&["optimize", "--config", &opt, "--algorithm", "uniform"]);
    assert_thread_invariant(&["ue", "--config", &ue]);
    assert_thread_invariant(&["power"]);
    assert_thread_invariant(&["ple", "--config", &cov, "--mode", "fit"]);
    assert_thread_invariant(&["ple", "--config", &opt, "--mode", "heatmap"]);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cov = fixtures().join("coverage.json");
    for d in ["a", "b"] {
        let o = run_in(&tmp.path().join(d), &["coverage", "--config", cov.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert!(artifacts(&tmp.path().join("a")) == artifacts(&tmp.path().join("b")));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let ue = fixtures().join("ue.json");
    let ue = ue.to_str().unwrap();
    assert!(run_in(&tmp.path().join("a"), &["ue", "--config", ue, "--seed", "1"]).status.success());
    assert!(run_in(&tmp.path().join("b"), &["ue", "--config", ue, "--seed", "2"]).status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("a/report.json")).unwrap()).unwrap();
    for section in ["tracer", "placement"] {
        assert_eq!(report["config"][section]["seed"], 1);
    }
    assert_eq!(report["config"]["ue"]["simulation"]["seed"], 1);
    assert!(artifacts(&tmp.path().join("a"))["users_a.csv"] != artifacts(&tmp.path().join("b"))["users_a.csv"]);
}

#[test]
fn empty_scene_coverage_is_friis() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"scene": {"synthetic": {"kind": "empty", "params": {"width_m": 100, "height_m": 80}}},
            "tracer": {"num_samples": 500},
            "transmitter": {"position": {"x": 40, "y": 30}, "height_m": 15, "tx_power_dbm": 20, "frequency_hz": 1e9}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_in(&out, &["coverage", "--config", config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("coverage.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (x, y): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        let pl: f64 = f[4].parse().unwrap();
        let d = ((x - 40.0).powi(2) + (y - 30.0).powi(2) + 13.5f64.powi(2)).sqrt();
        let friis = 20.0 * d.log10() + 20.0 * 1e9f64.log10() - 147.55;
        // CSV values carry six decimals.
        assert!((pl - friis).abs() < 1e-6, "{line}");
        assert_eq!(f[6], "reached");
        rows += 1;
    }
    assert_eq!(rows, 20 * 16);
}

#[test]
fn missing_scene_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"scene": {"path": "no/such/scene.json"},
            "transmitter": {"position": {"x": 1, "y": 1}, "height_m": 15, "tx_power_dbm": 17, "frequency_hz": 3.5e9}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_in(&out, &["coverage", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no/such/scene.json"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn invalid_field_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{"tracer": {"num_samples": 0}, "scene": {"synthetic": {"kind": "empty"}},
        "transmitter": {"position": {"x": 1, "y": 1}, "height_m": 15, "tx_power_dbm": 17, "frequency_hz": 3.5e9}}"#);
    let o = run_in(&tmp.path().join("out"), &["coverage", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("num_samples"), "{}", stderr(&o));

    let config = write_config(tmp.path(), r#"{"placement": {"overshoot": 2}}"#);
    let o = run_in(&tmp.path().join("out"), &["optimize", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("overshoot"), "{}", stderr(&o));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn brute_force_refuses_large_scenes() {
    let tmp = tempfile::tempdir().unwrap();
    let opt = fixtures().join("optimize.json");
    let out = tmp.path().join("out");
    let o = run_in(&out, &["optimize", "--config", opt.to_str().unwrap(), "--algorithm", "brute"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("brute-force limit"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn brute_force_on_a_tiny_scene() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"scene": {"synthetic": {"kind": "empty", "params": {"width_m": 60, "height_m": 60}}},
            "tracer": {"num_samples": 500, "max_depth": 0},
            "placement": {"candidate_spacing_m": 15}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_in(&out, &["optimize", "--config", config.to_str().unwrap(), "--algorithm", "brute"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("ratio_curve.csv")).unwrap(), "n,ratio\n1,1.000000\n");
}

#[test]
fn unreachable_target_keeps_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"scene": {"synthetic": {"kind": "empty", "params": {"width_m": 60, "height_m": 60}}},
            "tracer": {"num_samples": 500},
            "station": {"height_m": 15, "tx_power_dbm": -60, "frequency_hz": 3.5e9}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_in(&out, &["optimize", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unreachable"), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["target_reached"], false);
    assert!(out.join("ratio_curve.csv").exists());
    assert!(out.join("overlay.pgm").exists());
}

fn ratio_rows(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

#[test]
fn greedy_needs_no_more_stations_than_uniform() {
    let tmp = tempfile::tempdir().unwrap();
    let opt = fixtures().join("optimize.json");
    let opt = opt.to_str().unwrap();
    let g = tmp.path().join("g");
    let u = tmp.path().join("u");
    assert!(run_in(&g, &["optimize", "--config", opt]).status.success());
    assert!(run_in(&u, &["optimize", "--config", opt, "--algorithm", "uniform"]).status.success());
    let (gr, ur) = (ratio_rows(&g.join("ratio_curve.csv")), ratio_rows(&u.join("ratio_curve.csv")));
    assert!(gr.len() <= ur.len(), "greedy {} vs uniform {}", gr.len(), ur.len());
    assert!(gr.windows(2).all(|w| w[0] <= w[1]));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(g.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["placement"]["station_count"], gr.len());
}

#[test]
fn power_sweeps_and_class_totals() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_in(&out, &["power", "--count", "femto=30", "--count", "macro=1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for s in ["0.05", "0.01", "0.005", "0.0001"] {
        assert_eq!(ratio_rows(&out.join(format!("sweep_s{s}.csv"))).len(), 16);
    }
    let at01 = ratio_rows(&out.join("sweep_s0.01.csv"));
    let argmin = at01.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 + 1;
    assert_eq!(argmin, 4);
    let totals = std::fs::read_to_string(out.join("class_totals.csv")).unwrap();
    assert!(totals.lines().any(|l| l.starts_with("femto,30,") && l.contains(",312.000000,")), "{totals}");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["sweeps"][1]["n_star"], 4);
    assert_eq!(report["result"]["class_table_version"], "classes-v1");

    let out0 = tmp.path().join("s0");
    assert!(run_in(&out0, &["power", "--s", "0"]).status.success());
    let r = ratio_rows(&out0.join("sweep_s0.csv"));
    assert!(r.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn ple_fit_on_an_empty_scene_is_free_space() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"scene": {"synthetic": {"kind": "empty", "params": {"width_m": 200, "height_m": 200}}},
            "tracer": {"num_samples": 500},
            "transmitter": {"position": {"x": 100, "y": 100}, "height_m": 15, "tx_power_dbm": 17, "frequency_hz": 3.5e9}}"#,
    );
    let o = run_in(&tmp.path().join("out"), &["ple", "--config", config.to_str().unwrap(), "--mode", "fit"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("out/report.json")).unwrap()).unwrap();
    let gamma = report["result"]["fit"]["gamma"].as_f64().unwrap();
    assert!((gamma - 2.0).abs() < 1e-6, "{gamma}");
    assert!(stdout(&o).contains("gamma"));
}

#[test]
fn ple_fit_with_too_few_samples_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"scene": {"synthetic": {"kind": "empty", "params": {"width_m": 200, "height_m": 200}}},
            "tracer": {"num_samples": 500},
            "ple": {"max_radius_m": 12, "min_distance_m": 10},
            "transmitter": {"position": {"x": 100, "y": 100}, "height_m": 15, "tx_power_dbm": 17, "frequency_hz": 3.5e9}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_in(&out, &["ple", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("insufficient samples"), "{}", stderr(&o));
    assert!(out.join("ple_samples.csv").exists());
}

#[test]
fn identical_networks_have_zero_delta() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"scene": {"synthetic": {"kind": "uniform-city", "seed": 1, "params": {"width_m": 120, "height_m": 120}}},
            "tracer": {"num_samples": 2000, "max_depth": 2},
            "ue": {"simulation": {"num_users": 300},
                   "network_a": {"sites": [{"x": 40, "y": 40}]},
                   "network_b": {"sites": [{"x": 40, "y": 40}]}}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_in(&out, &["ue", "--config", config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["mean_delta_db"], 0.0);
    assert!(std::fs::read(out.join("users_a.csv")).unwrap() == std::fs::read(out.join("users_b.csv")).unwrap());
}

#[test]
fn indoor_site_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"scene": {"synthetic": {"kind": "uniform-city", "seed": 1, "params": {"width_m": 120, "height_m": 120}}},
            "ue": {"network_a": {"sites": [{"x": 20, "y": 20}]}, "network_b": "macro"}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_in(&out, &["ue", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ue.network_a: site (20, 20) lies inside building"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn scene_generate_then_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("city.json");
    let o = densify(&["scene", "generate", "--kind", "asymmetric-city", "--seed", "4", "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = densify(&["scene", "validate", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("asymmetric-city-4: ok"), "{}", stdout(&o));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "b", "bounds": [0, 0, 10, 10], "buildings": [{"footprint": [[1,1],[2,1],[2,2]], "height_m": 0}]}"#).unwrap();
    let o = densify(&["scene", "validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("building 0"), "{}", stderr(&o));
}

#[test]
fn fixture_scene_validates() {
    let o = densify(&["scene", "validate", fixtures().join("two_towers.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}
