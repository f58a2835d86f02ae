use std::path::Path;
use std::process::{Command, Output};

const TREE: &str = r#"[graph]
family = "tree"
delta = 3
depth = 3

[run]
seed = 99
radii = [1, 2]
bcs = ["plus", "free"]
betas = [1.5]
h = 0.0
estimators = ["exact", "mixing"]
coupling = "exact"
lanczos_tol = 1e-9

[caps]
max_spins = 12
set_size = 6
kesten_size = 8
"#;

fn growgap(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_growgap"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = TREE.replace("seed = 99\n", "");
    let out = growgap(&["gap"], &text, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("run.seed"), "{err}");
    assert!(err.contains("line 6"), "{err}");
}

#[test]
fn malformed_toml_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = TREE.replace("h = 0.0", "h = = 0.0");
    let out = growgap(&["gap"], &text, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 11"));
}

#[test]
fn free_vs_plus_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = growgap(&["free-vs-plus"], TREE, dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = read(dir.path(), "free-vs-plus.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,radius,beta,bc,exact_gap,upper,lower,tau1,seed,config_hash"
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    let bcs: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    assert_eq!(bcs, ["plus", "free", "plus", "free"]);
    for r in &rows {
        let gap: f64 = r[4].parse().unwrap();
        let upper: f64 = r[5].parse().unwrap();
        let lower: f64 = r[6].parse().unwrap();
        assert!(lower <= gap + 1e-9 && gap <= upper + 1e-9, "{r:?}");
        assert!(!r[7].is_empty(), "tau1 present for n <= 10");
    }
    // free boundary slows the chain at the larger radius
    let plus2: f64 = rows[2][4].parse().unwrap();
    let free2: f64 = rows[3][4].parse().unwrap();
    assert!(free2 < plus2);
    let jsonl = read(dir.path(), "free-vs-plus.jsonl");
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["seed"], 99);
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    }
    assert_eq!(
        jsonl
            .lines()
            .filter(|l| l.contains("free-vs-plus-contrast"))
            .count(),
        2
    );
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let text = TREE.replace(
        "coupling = \"exact\"",
        "coupling = \"monte-carlo\"\ncoupling_samples = 500",
    );
    assert!(growgap(&["gap", "--threads", "1"], &text, a.path())
        .status
        .success());
    assert!(growgap(&["gap", "--threads", "3"], &text, b.path())
        .status
        .success());
    for f in ["gap.csv", "gap.jsonl"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = growgap(&["kesten-audit", "--seed-override", "5"], TREE, dir.path());
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(read(dir.path(), "kesten-audit.jsonl").trim()).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["result"]["violation_count"], 0);
}

#[test]
fn failing_cells_do_not_stop_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let text = TREE.replace("max_spins = 12", "max_spins = 5");
    let out = growgap(&["exact-gibbs"], &text, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let jsonl = read(dir.path(), "exact-gibbs.jsonl");
    let recs: Vec<serde_json::Value> = jsonl
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(recs.len(), 4);
    assert!(recs[0].get("result").is_some());
    assert!(recs[2]["error"].as_str().unwrap().contains("max_spins"));
    assert!(dir
        .path()
        .join("out/gibbs/gibbs_r1_plus_beta1p5.bin")
        .exists());
}

#[test]
fn peierls_audit_on_tiling_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"[graph]
family = "hyperbolic"
v = 5
s = 4
depth = 4

[run]
seed = 1
radii = [3]

[caps]
set_size = 8
"#;
    let out = growgap(&["peierls-audit"], text, dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_str(read(dir.path(), "peierls-audit.jsonl").trim()).unwrap();
    assert_eq!(v["result"]["violation_count"], 0);
    assert!(v["result"]["worst_case"]["sets_examined"].as_u64().unwrap() > 0);
}
