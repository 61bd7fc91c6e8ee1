use std::path::Path;
use std::process::{Command, Output};

fn coherence(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coherence"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

const HEADER: &str = "experiment,d,c_true,seed,trial_id,verdict,calls_forward,calls_inverse,calls_controlled,copies_consumed,c_hat,abs_error,p_err";

#[test]
fn scaling_writes_sorted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = coherence(&[
        "scaling", "--kind", "amplified", "--trials", "25", "--c-grid", "0.25,0.0625,0.015625",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("slope="), "{stdout}");
    let csv = read(&out);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let keys: Vec<(f64, u64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 13);
            assert_eq!(f[0], "amplified-scaling");
            (f[2].parse().unwrap(), f[4].parse().unwrap())
        })
        .collect();
    assert_eq!(keys.len(), 75);
    assert!(keys.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        let o = coherence(&[
            "noise-sweep", "--trials", "20", "--c-grid", "0.04", "--p-err-grid", "0,0.01",
            "--seed", seed, "--out", p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        read(&p)
    };
    let a = run("a.csv", "5");
    assert_eq!(a, run("b.csv", "5"));
    assert_ne!(a, run("c.csv", "6"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# estimation\nc_grid = 0.25\ntrials = 4\nepsilon = 0.1\nrepetitions = 3\nseed = 2\n").unwrap();
    let out = dir.path().join("e.csv");
    let o = coherence(&[
        "estimate", "--config", cfg.to_str().unwrap(), "--trials", "6", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[0], "estimation-scaling");
        assert_eq!(f[3], "2");
        assert_eq!(f[5], "estimated");
        assert!(!f[10].is_empty() && !f[11].is_empty());
    }
}

#[test]
fn csv_to_stdout_without_out() {
    let o = coherence(&["detect", "--trials", "3", "--c-grid", "0.5", "--d", "2", "--delta", "0.1"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with(HEADER));
    assert_eq!(stdout.lines().count(), 4);
    assert!(stdout.lines().skip(1).all(|l| l.starts_with("boosted-detection,2,0.5,")));
}

#[test]
fn config_errors_exit_one_and_name_field() {
    for (args, field) in [
        (vec!["detect", "--d", "1"], "d"),
        (vec!["scaling", "--delta", "0.9"], "delta"),
        (vec!["estimate", "--trials", "many"], "trials"),
        (vec!["noise-sweep", "--channel", "thermal"], "channel"),
        (vec!["estimate", "--repetitions", "4"], "repetitions"),
        (vec!["detect", "--c-grid", "0.9"], "c-grid"),
    ] {
        let o = coherence(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("`{field}`")), "{args:?}: {err}");
    }
    assert_eq!(coherence(&["detect", "--config", "/nonexistent/x.cfg"]).status.code(), Some(1));
    assert_eq!(coherence(&["frobnicate"]).status.code(), Some(1));
    let bad = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(bad.path(), "no equals sign\n").unwrap();
    assert_eq!(coherence(&["detect", "--config", bad.path().to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn verify_passes() {
    let o = coherence(&["verify"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{stdout}");
}

#[test]
fn help_exits_zero() {
    assert!(coherence(&["--help"]).status.success());
}
