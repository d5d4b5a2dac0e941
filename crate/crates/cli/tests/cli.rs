use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bundleopt");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Data rows of a result table as `(header, rows)`, skipping the schema line.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema=bundleopt."));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn bundle_config(function: &str, sigma: f64) -> String {
    format!(
        r#"{{"function":"{function}","sigma":{sigma},"samples":10000,"seed":3,
            "grid":{{"start":-1,"stop":1,"points":21}}}}"#
    )
}

#[test]
fn heaviside_sweep_has_zero_first_order_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &bundle_config("heaviside", 0.5));
    let out = dir.path().join("out");
    let status = run(&["bundle-eval", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let (h, rows) = table(&out.join("bundle_eval.csv"));
    assert!(column(&h, &rows, "first_order_gradient").iter().all(|&g| g == 0.0));
    let zero = column(&h, &rows, "zero_order_gradient");
    let se = column(&h, &rows, "zero_order_se");
    let oracle = column(&h, &rows, "oracle_gradient");
    for ((z, s), o) in zero.iter().zip(&se).zip(&oracle) {
        assert!((z - o).abs() <= 5.0 * s + 1e-12, "{z} vs {o} (se {s})");
    }
}

#[test]
fn wiggly_sweep_estimates_match_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &bundle_config("wiggly_quadratic", 0.2));
    let out = dir.path().join("out");
    assert!(run(&["bundle-eval", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status
        .success());
    let (h, rows) = table(&out.join("bundle_eval.csv"));
    let est = column(&h, &rows, "bundled_estimate");
    let se = column(&h, &rows, "bundled_se");
    let oracle = column(&h, &rows, "oracle_value");
    for ((e, s), o) in est.iter().zip(&se).zip(&oracle) {
        assert!((e - o).abs() <= 4.0 * s);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "bundle-eval");
    assert_eq!(manifest["config"]["function"], "wiggly_quadratic");
    assert_eq!(manifest["seeds"][0], 3);
}

#[test]
fn constant_function_has_zero_gradients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"function":"constant","constant":2.5,"sigma":0.3,"samples":100,"seed":0,
            "grid":{"start":-1,"stop":1,"points":5}}"#,
    );
    let out = dir.path().join("out");
    assert!(run(&["bundle-eval", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status
        .success());
    let (h, rows) = table(&out.join("bundle_eval.csv"));
    for name in ["first_order_gradient", "oracle_gradient"] {
        assert!(column(&h, &rows, name).iter().all(|&g| g == 0.0), "{name}");
    }
    assert!(column(&h, &rows, "zero_order_gradient")
        .iter()
        .all(|&g| g.abs() < 1e-12));
    assert!(column(&h, &rows, "bundled_estimate").iter().all(|&v| v == 2.5));
}

#[test]
fn lti_plan_converges_in_one_iteration_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"task":"lti","instance_seed":1,"modes":["exact","first_order_bundle","zero_order_bundle"],"seed":0,"runs":2}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["plan", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (h, rows) = table(&a.join("results.csv"));
    let it = column(&h, &rows, "iteration");
    let cost = column(&h, &rows, "cost");
    let optimum = cost[1];
    for (i, c) in it.iter().zip(&cost) {
        if *i >= 1.0 {
            assert!((c - optimum).abs() <= 1e-6 * optimum);
        }
    }
    for name in ["results.csv", "trajectories.csv", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"task":"push_1d","modes":["first_order_bundle"],"seed":0,"runs":2,"max_iterations":2}"#,
    );
    let out = dir.path().join("out");
    assert!(
        run(&["plan", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "40"])
            .status
            .success()
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([40, 41]));
    assert!(!out.join("timing.csv").exists());
}

#[test]
fn contact_probe_shows_flat_exact_dynamics_when_separated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"params":{"mass":1,"dt":0.1,"stiffness":100,"friction":0.1,"box_half_height":0.5,"sphere_radius":0.1},
            "command_x":{"start":-0.4,"stop":0.4,"points":3},"command_gap":{"start":0.01,"stop":0.3,"points":3},
            "sigma":0.2,"bundling":{"method":"monte_carlo","samples":2000},"seed":1}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["contact-probe", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = table(&out.join("contact_probe.csv"));
    assert_eq!(rows.len(), 9);
    assert!(column(&h, &rows, "exact").iter().all(|&x| x == 0.0));
    let relaxed = column(&h, &rows, "relaxed");
    assert!(relaxed.iter().any(|&x| x != 0.0), "boundary layer drags the box");
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let unknown_key = write(
        dir.path(),
        "a.json",
        r#"{"task":"lti","modes":["exact"],"seed":0,"runs":1,"typo":1}"#,
    );
    let unknown_fn = write(dir.path(), "b.json", &bundle_config("sawtooth", 0.2));
    let bad_sigma = write(dir.path(), "c.json", &bundle_config("vee", -1.0));
    let unknown_task = write(
        dir.path(),
        "d.json",
        r#"{"task":"juggling","modes":["exact"],"seed":0,"runs":1}"#,
    );
    for (verb, cfg) in [
        ("plan", unknown_key.as_str()),
        ("bundle-eval", unknown_fn.as_str()),
        ("bundle-eval", bad_sigma.as_str()),
        ("plan", unknown_task.as_str()),
        ("plan", "/nonexistent/config.json"),
    ] {
        let o = run(&[verb, "--config", cfg, "--out", out]);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{verb} {cfg}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = run(&["plan", "--out", out]);
    assert_eq!(o.status.code(), Some(2), "missing --config is a usage error");
}
