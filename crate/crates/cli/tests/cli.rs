//! End-to-end runs of the `cvqkd` binary.

use std::path::Path;
use std::process::{Command, Output};

use cvqkd_cli::{EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd"))
        .args(args)
        .env("SKR_WORKERS", "2")
        .output()
        .expect("spawn cvqkd")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn skr_curve_to_stdout() {
    let o = cvqkd(&[
        "skr-curve",
        "--protocol",
        "4qam,gg02",
        "--distance",
        "50",
        "--xi",
        "0.01",
        "--nbar-grid",
        "0.1,1",
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(
        text.lines().next().unwrap(),
        "protocol,d_km,xi_snu,nbar,nu_opt,delta,I_AB_bits,chi_BE_bits,SKR_bits"
    );
    assert_eq!(column(&text, "protocol"), ["4QAM", "4QAM", "GG02", "GG02"]);
    assert_eq!(column(&text, "nbar"), ["0.1", "1", "0.1", "1"]);
}

#[test]
fn json_output_uses_csv_field_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let o = cvqkd(&[
        "distance-sweep",
        "--protocol",
        "gg02",
        "--distance",
        "20,60",
        "--xi",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<serde_json::Map<String, serde_json::Value>> =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    let keys: Vec<&str> = rows[0].keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        ["protocol", "d_km", "xi_snu", "SKR_max", "nbar_opt", "nu_opt", "nbar_min", "nbar_max", "R"]
    );
    // GG02 against itself.
    assert_eq!(rows[1]["R"], serde_json::json!(1.0));
}

#[test]
fn empty_baseline_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let base = write(dir.path(), "empty.csv", "");
    let o = cvqkd(&[
        "compare",
        "--protocol",
        "gg02",
        "--distance",
        "50",
        "--xi",
        "0",
        "--baseline",
        &base,
    ]);
    assert_eq!(code(&o), EXIT_USAGE);
    assert!(String::from_utf8_lossy(&o.stderr).contains("baseline"));
}

#[test]
fn non_monotone_baseline_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let base = write(dir.path(), "b.csv", "d_km,value\n50,1\n40,1\n");
    let o = cvqkd(&[
        "compare",
        "--protocol",
        "gg02",
        "--distance",
        "45",
        "--xi",
        "0",
        "--baseline",
        &base,
    ]);
    assert_eq!(code(&o), EXIT_USAGE);
}

#[test]
fn gg02_self_comparison_is_unity() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = cvqkd(&[
        "distance-sweep",
        "--protocol",
        "gg02",
        "--distance",
        "10,50,120",
        "--xi",
        "0",
    ]);
    assert_eq!(code(&sweep), EXIT_OK);
    let text = stdout(&sweep);
    let mut baseline = String::from("d_km,value\n");
    for (d, s) in column(&text, "d_km").iter().zip(column(&text, "SKR_max")) {
        baseline.push_str(&format!("{d},{s}\n"));
    }
    let base = write(dir.path(), "gg02.csv", &baseline);
    let o = cvqkd(&[
        "compare",
        "--protocol",
        "gg02",
        "--distance",
        "10,50,120",
        "--xi",
        "0",
        "--baseline",
        &base,
        "--quantity",
        "skr-max",
    ]);
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for (r, ratio) in column(&out, "R").iter().zip(column(&out, "ratio")) {
        assert!((r.parse::<f64>().unwrap() - 1.0).abs() < 1e-9);
        assert!((ratio.parse::<f64>().unwrap() - 1.0).abs() < 1e-9, "{ratio}");
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["skr-curve", "--protocol", "8qam"],
        vec!["distance-sweep", "--zeta", "1.5"],
        vec!["noise-tolerance", "--distance", "0:10:0:lin"],
        vec!["compare", "--protocol", "gg02"],
        vec!["frobnicate"],
    ] {
        let o = cvqkd(&args);
        assert_eq!(code(&o), EXIT_USAGE, "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "protocols = [\"gg02\"]\nunknown_key = 3\n");
    assert_eq!(code(&cvqkd(&["--config", &cfg, "distance-sweep"])), EXIT_USAGE);
    assert_ne!(EXIT_USAGE, EXIT_NUMERICAL);
}

#[test]
fn dumped_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = cvqkd(&[
        "power-range",
        "--protocol",
        "pas-16qam,u-64qam",
        "--distance",
        "1:100:7:log",
        "--xi",
        "0.02",
        "--nbar-max",
        "50",
        "--dump-config",
    ]);
    assert_eq!(code(&first), EXIT_OK);
    let cfg = write(dir.path(), "cfg.toml", &stdout(&first));
    let second = cvqkd(&["--config", &cfg, "power-range", "--dump-config"]);
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "protocols = [\"gg02\"]\nxi = [0.05]\ndistances = [10.0]\n",
    );
    let o = cvqkd(&["--config", &cfg, "noise-tolerance", "--distance", "30", "--dump-config"]);
    let text = stdout(&o);
    assert!(text.contains("distances = [30.0]"), "{text}");
    assert!(text.contains("protocols = [\"GG02\"]"), "{text}");
}
