use std::process::{Command, Output};

fn qbai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbai")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bestarm_example_passes() {
    let o = qbai(&["bestarm", "--p", "0.9,0.1", "--delta", "0.05", "--trials", "400", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("trial ")).count(), 400);
    assert!(text.contains("success rate") && text.contains("PASS"));
}

#[test]
fn missing_instance_is_a_usage_error() {
    let o = qbai(&["bestarm", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--p"));
}

#[test]
fn single_trial_prints_a_transcript() {
    let o = qbai(&["bestarm", "--p", "0.2,0.8,0.5", "--trials", "1"]);
    let text = stdout(&o);
    assert!(text.contains("round 1") && text.contains("final thresholds"));
}

#[test]
fn bound_reports_both_forms() {
    let o = qbai(&["bound", "--p", "0.6,0.4", "--delta", "0.05", "--p-floor", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.split_whitespace().last().unwrap().parse().unwrap()
    };
    assert!(value("simplified bound") <= value("intermediate bound"));
    assert_eq!(qbai(&["bound", "--p", "0.6,0.4", "--p-floor", "0.6"]).status.code(), Some(2));
    assert_eq!(qbai(&["bound", "--p", "0.9,0.4", "--p-floor", "0.2"]).status.code(), Some(2));
}

#[test]
fn bound_vanishes_near_half() {
    let o = qbai(&["bound", "--p", "0.6,0.4", "--delta", "0.49"]);
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("intermediate bound")).unwrap();
    let v: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert!(v < 1e-3);
}

#[test]
fn validate_catches_a_flipped_threshold() {
    let clean = qbai(&["validate", "--level", "quick"]);
    assert_eq!(clean.status.code(), Some(0));
    let broken = qbai(&["validate", "--level", "quick", "--inject-gae-flip"]);
    assert_eq!(broken.status.code(), Some(1));
    let text = stdout(&broken);
    let failed = text.lines().find(|l| l.starts_with("failed suites")).unwrap();
    assert!(failed.contains("gae-guarantees"));
}

#[test]
fn sweep_writes_csv_and_dat() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let dat = dir.path().join("s.dat");
    let o = Command::new(env!("CARGO_BIN_EXE_qbai"))
        .args(["sweep", "--ns", "2,3", "--gap-exponents", "2,4,6,8", "--trials", "1"])
        .arg("--out")
        .arg(&csv)
        .arg("--dat")
        .arg(&dat)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "instance_id,n,H,delta2,delta,modeled_quantum_cost,raw_oracle_calls,classical_se_pulls,classical_naive_pulls,lower_bound,success,seed"
    );
    assert_eq!(text.lines().count(), 1 + 8);
    assert_eq!(std::fs::read_to_string(&dat).unwrap().lines().count(), 1 + 8);
    assert!(stdout(&o).contains("slope"));
}

#[test]
fn degenerate_sweep_is_rejected() {
    let o = qbai(&["sweep", "--ns", "2", "--gap-exponents", "2,3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# two arms\np = 0.7, 0.3\ndelta = 0.2\ntrials = 3\nseed = 4\n").unwrap();
    let o = qbai(&["bestarm", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("trial ")).count(), 3);
    let o = qbai(&["bestarm", "--config", cfg.to_str().unwrap(), "--trials", "5"]);
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("trial ")).count(), 5);
}

#[test]
fn instance_file_and_pac() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("i.json");
    std::fs::write(&f, r#"{"p": [0.6, 0.59, 0.2]}"#).unwrap();
    let o = qbai(&["pac", "--file", f.to_str().unwrap(), "--eps", "0.1", "--delta", "0.1", "--trials", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("eps-optimal rate"));
}

#[test]
fn baseline_and_fixed_budget() {
    let o = qbai(&["baseline", "--p", "0.9,0.5,0.1", "--delta", "0.1", "--trials", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let o = qbai(&["fixedbudget", "--p", "0.9,0.1", "--budget", "3e13", "--tc", "0.1:1e13,0.3:5e12"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("plan: delta*"));
    let o = qbai(&["fixedbudget", "--p", "0.9,0.1", "--budget", "10", "--tc", "0.1:1e13"]);
    assert_eq!(o.status.code(), Some(2));
}
