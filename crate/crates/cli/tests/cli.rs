use std::process::Command;

fn drbf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drbf"))
}

fn run(args: &[&str]) -> std::process::Output {
    drbf().args(args).output().expect("binary runs")
}

#[test]
fn unknown_preset_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["reproduce", "--preset", "table9", "--out", out]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("table9"));
}

#[test]
fn config_and_preset_are_exclusive() {
    let o = run(&["run", "--preset", "table1", "--config", "x.cfg"]);
    assert!(!o.status.success());
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.cfg");
    std::fs::write(&p, "n_rx=8\nn_tx=four\n").unwrap();
    let o = run(&["run", "--config", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn export_frame_is_deterministic_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&["export-frame", "--preset", "table1", "--seed", "7", "--pilot-size", "12", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let f = drbf::csvio::read_frame(&a).unwrap();
    assert_eq!((f.n_rx(), f.n_tx(), f.len()), (8, 4, 12));
    let cfg = drbf::presets::preset("table1").unwrap();
    let mut cfg = cfg;
    cfg.master_seed = 7;
    let ep = drbf::harness::generate_episode(&cfg, 12, drbf::harness::episode_seed(7, 0)).unwrap();
    assert_eq!(f, ep.pilots);
}

#[test]
fn run_writes_results_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "episodes=50\npilot_sizes=10,20\nmethods=wiener,kernel_dl:1\ntest_len=40\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "episodes=2",
        "--set",
        "pilot_sizes=15",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("Wiener,15,mse,") && lines[1].ends_with(",2"));
    assert!(lines[2].starts_with("Kernel-DL,15,mse,"));
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("episodes=2"));
    assert!(out.join("plot.gp").exists());
}

#[test]
fn reproduce_table_annotates_published_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1");
    let o = run(&["reproduce", "--preset", "table1", "--set", "episodes=2", "--set", "test_len=50", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].ends_with(",paper_value"));
    assert_eq!(lines.len(), 12);
    let wiener = lines.iter().find(|l| l.starts_with("Wiener,10,")).unwrap();
    assert!(wiener.ends_with(",3.3"));
}

#[test]
fn total_method_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "pilot_sizes=4\nmethods=wiener,wiener_dl:0.1\nepisodes=2\ntest_len=20\n").unwrap();
    let out = dir.path().join("f");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    // Results are still written for the methods that worked.
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("Wiener,4,mse,,")));
    assert!(csv.lines().any(|l| l.starts_with("Wiener-DL,4,mse,") && l.ends_with(",2")));
}

#[test]
fn tune_prints_best() {
    let o = run(&[
        "tune", "--preset", "table1", "--set", "tune_episodes=2", "--set", "test_len=40", "--method", "wiener_dl",
        "--grid", "0.1,1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("best wiener_dl ="));
}
