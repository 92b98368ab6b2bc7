use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rydberg-energy"));
    c.env_remove("RYDBERG_PROFILE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn crossover(o: &Output) -> Option<usize> {
    let text = stderr(o) + &stdout(o);
    let line = text.lines().find(|l| l.starts_with("crossover")).expect("crossover line");
    line.rsplit(": ").next().unwrap().trim().parse().ok()
}

#[test]
fn estimate_qft4_has_computation() {
    let v = json(&run(&["estimate", "qft:4", "--mode", "calibrated", "--format", "json"]));
    let comp = v["categories"]["computation"].as_object().unwrap();
    assert!(comp.values().map(|e| e.as_f64().unwrap()).sum::<f64>() > 0.0);
}

#[test]
fn estimate_qft1_single_shot_is_one_hadamard() {
    let v = json(&run(&["estimate", "qft:1", "--shots", "1", "--format", "json"]));
    let comp = v["categories"]["computation"].as_object().unwrap();
    let total: f64 = comp.values().map(|e| e.as_f64().unwrap()).sum();
    assert!((total - 4.98e-6).abs() < 1e-15, "{total}");
}

#[test]
fn estimate_measured_h2_total() {
    let v = json(&run(&["estimate", "qpe:h2", "--measured", "--format", "json"]));
    let total = v["total_J"].as_f64().unwrap();
    assert!(((total - 38.63) / 38.63).abs() <= 0.001, "{total}");
}

#[test]
fn estimate_json_and_csv_agree() {
    let v = json(&run(&["estimate", "qft:3", "--format", "json"]));
    let csv = stdout(&run(&["estimate", "qft:3", "--format", "csv"]));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("category,source,energy_J"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let from_json = v["categories"][f[0]][f[1]].as_f64().unwrap();
        assert_eq!(f[2].parse::<f64>().unwrap(), from_json, "{line}");
    }
}

#[test]
fn estimate_bad_circuit_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    std::fs::write(&path, "qubits 2\nH 0\nCZ 0 7\n").unwrap();
    let o = run(&["estimate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn qft_build_output_feeds_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qft3.txt");
    let o = run(&["qft-build", "--n", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let from_file = json(&run(&["estimate", path.to_str().unwrap(), "--format", "json"]));
    let builtin = json(&run(&["estimate", "qft:3", "--format", "json"]));
    assert_eq!(from_file, builtin);
}

#[test]
fn reproduce_tables_pass() {
    for t in ["computation", "baseline", "all"] {
        let o = run(&["reproduce", "--table", t]);
        assert_eq!(o.status.code(), Some(0), "{t}: {}", stdout(&o));
    }
    let out = stdout(&run(&["reproduce", "--table", "computation"]));
    for cell in ["0.035", "0.028", "0.599", "0.662"] {
        assert!(out.contains(cell), "{cell}");
    }
    let out = stdout(&run(&["reproduce", "--table", "baseline"]));
    for cell in ["54.34", "0.0792", "0.01", "0.1"] {
        assert!(out.contains(cell), "{cell}");
    }
}

#[test]
fn reproduce_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    let text = default_profile_text().replace("power_mw = 11000.0", "power_mw = 12000.0");
    std::fs::write(&path, text).unwrap();
    let o = run(&["--profile", path.to_str().unwrap(), "reproduce", "--table", "computation"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("1040 nm"), "{}", stderr(&o));
}

fn default_profile_text() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/default_profile.toml")).unwrap()
}

#[test]
fn profile_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "bogus = 1\n").unwrap();
    let o = run(&["--profile", path.to_str().unwrap(), "estimate", "qft:2"]);
    assert_eq!(o.status.code(), Some(3));
    let o = bin().env("RYDBERG_PROFILE", dir.path().join("missing.toml")).args(["reproduce"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn profile_from_environment_and_not_mutated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    let text = default_profile_text();
    std::fs::write(&path, &text).unwrap();
    let o = bin().env("RYDBERG_PROFILE", &path).args(["estimate", "qft:2", "--format", "json"]).output().unwrap();
    assert_eq!(json(&o), json(&run(&["estimate", "qft:2", "--format", "json"])));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(run(&["estimate", "qft:2", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["estimate", "qft:2", "--format", "yaml"]).status.code(), Some(2));
}

#[test]
fn scale_single_row_and_determinism() {
    let o = run(&["scale", "--n-min", "7", "--n-max", "7", "--fit", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
    assert!(stderr(&o).contains("fit: skipped"));
    let again = run(&["scale", "--n-min", "7", "--n-max", "7", "--fit", "--format", "csv"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn scale_empty_range() {
    assert_eq!(run(&["scale", "--n-min", "9", "--n-max", "3"]).status.code(), Some(2));
}

#[test]
fn scale_fit_over_asymptotic_range() {
    let o = run(&["scale", "--n-min", "1000", "--n-max", "100000", "--points", "25", "--fit", "--format", "csv"]);
    let fit = stderr(&o);
    let get = |k: &str| -> f64 {
        let tail = fit.split(&format!("{k}=")).nth(1).unwrap();
        tail.split_whitespace().next().unwrap().parse().unwrap()
    };
    assert!((get("gates") - 2.0).abs() < 0.1);
    assert!((get("transport") - 2.5).abs() < 0.1);
    assert!((get("traps") - 3.0).abs() < 0.1);
}

#[test]
fn scale_json_matches_csv() {
    let args = ["scale", "--n-min", "2", "--n-max", "40", "--step", "7"];
    let v = json(&run(&[&args[..], &["--format", "json"]].concat()));
    let csv = stdout(&run(&[&args[..], &["--format", "csv"]].concat()));
    let rows = v["rows"].as_array().unwrap();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), lines.len());
    for (r, line) in rows.iter().zip(lines) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f[0], r["n"].as_f64().unwrap());
        assert_eq!(f[5], r["E_total_J"].as_f64().unwrap());
    }
}

#[test]
fn output_extension_sets_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.json");
    let o = run(&["scale", "--n-min", "2", "--n-max", "12", "--fit", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 11);
    assert!(stdout(&o).starts_with("fit"));
}

#[test]
fn compare_crossovers() {
    let jedi = crossover(&run(&["compare", "--machine", "jedi", "--n-max", "60", "--format", "csv"])).unwrap();
    assert!((37..=41).contains(&jedi), "{jedi}");
    let el = crossover(&run(&["compare", "--machine", "elcapitan", "--n-max", "60", "--format", "csv"])).unwrap();
    assert!(el <= jedi + 1);
    let o = run(&["compare", "--n-min", "10", "--n-max", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(crossover(&o), None);
    assert!(stdout(&o).contains("none"));
}

#[test]
fn compare_unknown_machine_lists_catalog() {
    let o = run(&["compare", "--machine", "deep-thought"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("elcapitan") && stderr(&o).contains("jedi"));
}

#[test]
fn compare_custom_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.toml");
    std::fs::write(&path, "[machines.cheap]\njoules_per_bitop = 1e-20\n").unwrap();
    let o = run(&["compare", "--catalog", path.to_str().unwrap(), "--machine", "cheap", "--format", "json"]);
    let v = json(&o);
    let n = v["crossover"].as_u64().unwrap();
    assert!(n > 41, "{n}");
}

#[test]
fn transport_sim_is_reproducible() {
    let args = ["transport-sim", "--n", "25", "--gates", "10000", "--seed", "7", "--format", "csv"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&run(&["transport-sim", "--n", "25", "--gates", "10000", "--format", "json"]));
    assert!(v["summary"]["r_squared"].as_f64().unwrap() > 0.98);
    assert_eq!(v["summary"]["seed"].as_u64(), Some(42));
    assert_eq!(v["summary"]["analytic_slope"].as_f64(), Some(1.10));
}

#[test]
fn transport_sim_blockade_covers_everything() {
    let v = json(&run(&[
        "transport-sim", "--n", "4", "--policy", "move_adjacent_stay", "--blockade-radius", "2", "--format", "json",
    ]));
    assert_eq!(v["summary"]["slope"].as_f64(), Some(0.0));
}

#[test]
fn transport_sim_rejects_tiny_arrays() {
    assert_eq!(run(&["transport-sim", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["transport-sim", "--n", "4", "--policy", "teleport"]).status.code(), Some(2));
}

#[test]
fn compile_lists_sources() {
    let o = run(&["compile", "qft:2", "--mode", "first-principles"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for src in ["microwave", "laser459", "laser1040", "wall clock"] {
        assert!(out.contains(src), "{src}");
    }
    let v = json(&run(&["compile", "qft:2", "--mode", "calibrated", "--format", "json"]));
    assert!(v["timing"]["on_time"]["calibrated_cz"].as_f64().unwrap() > 0.0);
}
