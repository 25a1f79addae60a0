use mpsqp::io::Table;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mpsqp"));
    c.env_remove("MPSQP_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn table(p: &Path) -> Table {
    Table::from_csv(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Same headers and cells; numeric cells agree to 1e-9.
fn assert_matches_golden(actual: &Path, name: &str) {
    let (a, g) = (table(actual), table(&golden(name)));
    assert_eq!(a.headers, g.headers, "{name}: headers");
    assert_eq!(a.rows.len(), g.rows.len(), "{name}: row count");
    for (ra, rg) in a.rows.iter().zip(&g.rows) {
        for (x, y) in ra.iter().zip(rg) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(p), Ok(q)) => assert!((p - q).abs() <= 1e-9 * (1.0 + q.abs()), "{name}: {x} vs {y}"),
                _ => assert_eq!(x, y, "{name}"),
            }
        }
    }
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn spectrum_of_pauli_channel() {
    let dir = tempfile::tempdir().unwrap();
    let mps = dir.path().join("pauli.json");
    mpsqp::io::write_mps(&mps, &mpsqp::mps::pauli_tensor([0.7, 0.1, 0.1, 0.1])).unwrap();
    let out = dir.path().join("out");
    let o = run(&["spectrum", "--mps", mps.to_str().unwrap(), "--out", &out_arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = table(&out.join("spectrum.csv"));
    let moduli: Vec<f64> = t.rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(moduli.len(), 4);
    for (m, w) in moduli.iter().zip([1.0, 0.6, 0.6, 0.6]) {
        assert!((m - w).abs() < 1e-12);
    }
    assert_matches_golden(&out.join("spectrum.csv"), "spectrum_pauli.csv");
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "spectrum");
    assert_eq!(m["args"]["mps"], mps.to_str().unwrap());
}

#[test]
fn golden_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str, &str); 3] = [
        (&["cp-check", "--D", "3", "--moduli", "1,0.9,0.9", "--kappas", "0,1,-1"], "cp_check.csv", "cp_check_d3.csv"),
        (&["localization", "--W", "0,1", "--points", "5"], "localization.csv", "localization_small.csv"),
        (&["dispersion", "--builtin", "pauli", "--L", "2", "--k-points", "4"], "dispersion.csv", "dispersion_pauli.csv"),
    ];
    for (i, (args, file, gold)) in cases.iter().enumerate() {
        let out = dir.path().join(i.to_string());
        let mut v = args.to_vec();
        let o = out_arg(&out);
        v.extend(["--out", &o]);
        assert!(run(&v).status.success(), "{args:?}");
        assert_matches_golden(&out.join(file), gold);
    }
}

#[test]
fn verify_records_ground_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--builtin", "pauli", "--N", "6", "--L", "2", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("verify.json"));
    assert!(r["ground_residual"].as_f64().unwrap() <= 1e-8);
    assert!(r["ground_energy"].as_f64().unwrap() >= -1e-8);
    let levels = table(&dir.path().join("levels.csv"));
    assert_eq!(levels.headers, ["index", "energy", "momentum_rad"]);
    assert_eq!(levels.rows.len(), 4);
}

#[test]
fn disordered_localization_curve_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["localization", "--family", "aklt", "--W", "1", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let t = table(&dir.path().join("localization.csv"));
    assert_eq!(t.headers, ["t", "lambda", "W", "xi"]);
    let xi: Vec<f64> = t.rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(xi.len(), 41);
    assert!(xi.iter().all(|&x| (1.0..=4.0).contains(&x)));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["args"]["n"], 100);
    assert_eq!(m["args"]["tmax"], 1e4);
}

#[test]
fn manifest_rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&[&str], &[&str]); 4] = [
        (&["spectrum", "--builtin", "aklt"], &["spectrum.csv", "spectrum.json"]),
        (&["localization", "--W", "0.5", "--points", "6", "--ensemble", "quenched", "--seeds", "3,4"], &["localization.csv"]),
        (&["glauber", "--beta", "0.5", "--sites", "12", "--horizon", "2", "--seed", "7"], &["correlations.csv", "events.jsonl", "glauber.json"]),
        (&["bound-state", "--builtin", "pauli", "--L", "4,8", "--gammas", "0.5"], &["bound_state.csv"]),
    ];
    for (i, (args, files)) in runs.iter().enumerate() {
        let (a, b) = (dir.path().join(format!("{i}a")), dir.path().join(format!("{i}b")));
        let mut v = args.to_vec();
        let oa = out_arg(&a);
        v.extend(["--out", &oa]);
        assert!(run(&v).status.success(), "{args:?}");
        let manifest = a.join("manifest.json");
        let o = run(&["--config", manifest.to_str().unwrap(), "--out", &out_arg(&b)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        for f in *files {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
        }
        assert_eq!(json(&manifest)["args"], json(&b.join("manifest.json"))["args"]);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = vec![];
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let o = run(&["glauber", "--beta", "0.25", "--sites", "10", "--horizon", "1", "--threads", threads, "--out", &out_arg(&out)]);
        assert!(o.status.success());
        outs.push(std::fs::read(out.join("correlations.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn exit_codes_and_error_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["dispersion", "--builtin", "pauli", "--L", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["error"]["kind"], "validation");

    assert_eq!(run(&["spectrum", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum"]).status.code(), Some(2));

    let out = dir.path().join("few");
    let o = run(&["glauber", "--beta", "0.5", "--trajectories", "50", "--out", &out_arg(&out)]);
    assert_eq!(o.status.code(), Some(3));
    let rec = json(&out.join("error.json"));
    assert_eq!(rec["error"]["code"], "statistics");
    assert!(out.join("manifest.json").exists());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"d":2,"bond":1,"matrices":[[[[1,0]]]]}"#).unwrap();
    assert_eq!(run(&["spectrum", "--mps", bad.to_str().unwrap(), "--out", &out_arg(dir.path())]).status.code(), Some(2));
}

#[test]
fn config_flag_conflicts_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command":"localization","args":{"n":50,"w":[1]}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let o = out_arg(&dir.path().join("o"));
    assert_eq!(run(&["--config", c, "localization", "--N", "60", "--out", &o]).status.code(), Some(2));
    assert_eq!(run(&["--config", c, "localization", "--N", "50", "--points", "3", "--out", &o]).status.code(), Some(0));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("MPSQP_OUT", dir.path())
        .args(["cp-check", "--D", "2", "--moduli", "1,0.5", "--kappas", "0,0"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("cp_check.json").exists());
}
