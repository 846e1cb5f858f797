use std::f64::consts::PI;
use std::process::{Command, Output};

fn freelln(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freelln")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn density_of_equal_parameters_at_one() {
    let o = freelln(&["density", "--alpha", "1", "--beta", "1", "--xmin", "0.1", "--xmax", "10", "--points", "100"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x,density"));
    let table = rows(&text);
    assert_eq!(table.len(), 100);
    let at_one = table.iter().find(|r| (r[0] - 1.0).abs() < 1e-12).expect("grid contains 1");
    assert!((at_one[1] - 1.0 / (2.0 * PI)).abs() < 1e-10);
    // μ(1,1) has density 1 / (π √x (1 + x))
    for r in &table {
        let exact = 1.0 / (PI * r[0].sqrt() * (1.0 + r[0]));
        assert!((r[1] - exact).abs() < 1e-12 * exact.max(1.0));
    }
}

#[test]
fn second_moment_of_free_poisson() {
    let o = freelln(&["moments", "--alpha", "1", "--beta", "0", "--gamma", "2"]);
    assert!(o.status.success());
    let table = rows(&stdout(&o));
    assert!((table[0][1] - 2.0).abs() < 1e-12);
}

#[test]
fn moments_of_a_measure_file() {
    let dir = std::env::temp_dir().join(format!("freelln-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("atoms.json");
    std::fs::write(&path, r#"{"atoms": [{"x": 1, "w": 0.5}, {"x": 4, "w": 0.5}]}"#).unwrap();
    let o = freelln(&["moments", "--measure", path.to_str().unwrap(), "--gamma", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // ½·1 + ½·2
    assert!((rows(&stdout(&o))[0][1] - 1.5).abs() < 1e-9);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn limit_cdf_of_free_poisson_is_uniform() {
    let o = freelln(&["cdf-limit", "--alpha", "1", "--beta", "0", "--xmin", "0.05", "--xmax", "0.95", "--points", "19"]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        assert!((r[1] - r[0]).abs() < 1e-12);
    }
}

#[test]
fn transforms_table() {
    let o = freelln(&["transforms", "--alpha", "1", "--beta", "0", "--points", "4"]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        let (z, chi, s) = (r[0], r[1], r[2]);
        assert!((s - 1.0 / (1.0 + z)).abs() < 1e-12 * s);
        // ψ(χ(z)) = z for the free Poisson law, where ψ(u) = (1 - 2u - √(1 - 4u)) / (2u)
        let psi = (1.0 - 2.0 * chi - (1.0 - 4.0 * chi).sqrt()) / (2.0 * chi);
        assert!((psi - z).abs() < 1e-12);
    }
}

#[test]
fn logstats_report_columns() {
    let o = freelln(&["logstats", "--alpha", "1", "--beta", "0", "--n", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rec = &v[0];
    // E ln x = -1 for μ(1,0)
    assert!((rec["mean_ln"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    assert_eq!(rec["n"].as_f64(), Some(2.0));
}

#[test]
fn verify_all_passes_and_reports() {
    let o = freelln(&["verify", "--suite", "all", "--seed", "42"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        for key in ["name", "theorem_tag", "value", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
        assert_eq!(c["pass"], true);
    }
}

#[test]
fn output_is_reproducible() {
    let args = ["mc-product", "--alpha", "1", "--beta", "1", "--n", "3", "--dim", "16", "--trials", "3", "--seed", "5"];
    let a = freelln(&args);
    let b = freelln(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().next(), Some("trial,index,value"));
    assert_eq!(stdout(&a).lines().count(), 1 + 3 * 16);
    let v1 = freelln(&["verify", "--suite", "transforms", "--seed", "7"]);
    let v2 = freelln(&["verify", "--suite", "transforms", "--seed", "7"]);
    assert_eq!(v1.stdout, v2.stdout);
}

#[test]
fn writes_to_file() {
    let path = std::env::temp_dir().join(format!("freelln-out-{}.csv", std::process::id()));
    let o = freelln(&["moments", "--alpha", "0", "--beta", "1", "--gamma", "0.25", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("gamma,moment\n"));
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(freelln(&["moments", "--alpha", "1", "--beta", "0"]).status.code(), Some(64));
    assert_eq!(freelln(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(freelln(&["density", "--alpha", "1", "--beta", "0", "--points", "1"]).status.code(), Some(64));
    let domain = freelln(&["density", "--alpha", "-1", "--beta", "0"]);
    assert_eq!(domain.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&domain.stderr).lines().count(), 1);
    let gamma = freelln(&["moments", "--measure", "/nonexistent/file.json", "--gamma", "0.5"]);
    assert_eq!(gamma.status.code(), Some(64));
    assert_eq!(freelln(&["--help"]).status.code(), Some(0));
    assert_eq!(freelln(&["--version"]).status.code(), Some(0));
}
