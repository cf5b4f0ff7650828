mod common;

use common::*;
use drbf::config::*;
use drbf::csvio::*;
use drbf::dro::TraceRow;
use drbf::harness::*;
use drbf::linear::BeamformerWeights;
use drbf::rkhs::*;
use drbf::scene::*;
use drbf::types::*;

#[test]
fn config_parse_and_defaults() {
    let cfg = parse_config_str("# comment\nn_rx = 16\npilot_sizes=32,50 # trailing\n\nmethods=wiener,wiener_dl:0.2\n").unwrap();
    assert_eq!(cfg.n_rx, 16);
    assert_eq!(cfg.pilot_sizes, vec![32, 50]);
    assert_eq!(cfg.methods, vec![Method::Wiener, Method::WienerDl { eps: 0.2 }]);
    assert_eq!(cfg.n_tx, 4);
    assert_eq!(parse_config_str("").unwrap(), ExperimentConfig::default());
}

#[test]
fn config_errors_carry_line_numbers() {
    let e = parse_config_str("n_rx=8\n\nn_rx=9\n").unwrap_err();
    assert!(matches!(e, drbf::Error::Parse { line: 3, .. }), "{e}");
    let e = parse_config_str("n_rx=8\nbogus_key=1\n").unwrap_err();
    assert!(matches!(e, drbf::Error::Parse { line: 2, .. }));
    let e = parse_config_str("just words\n").unwrap_err();
    assert!(e.to_string().starts_with("line 1:"));
    assert!(parse_config_str("n_rx=eight\n").is_err());
    assert!(parse_config_str("impulse_fraction=3\n").is_err());
    assert!(parse_config_str("kernel_smoothness=2\nkernel=matern\n").is_err());
}

#[test]
fn config_round_trip_and_overrides() {
    let mut cfg = drbf::presets::preset("table1").unwrap();
    cfg.kernel_bandwidth = Some(0.75);
    cfg.solver.tol = 1e-9;
    let text = to_config_text(&cfg);
    assert_eq!(parse_config_str(&text).unwrap(), cfg);
    for k in KEYS {
        assert!(text.contains(&format!("{k}=")), "{k} missing");
    }
    apply_override(&mut cfg, "episodes=3").unwrap();
    assert_eq!(cfg.episodes, 3);
    apply_override(&mut cfg, "kernel_bandwidth=median").unwrap();
    assert_eq!(cfg.kernel_bandwidth, None);
    assert!(apply_override(&mut cfg, "episodes").is_err());
    assert!(apply_override(&mut cfg, "n_tx=0").is_err());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.cfg");
    std::fs::write(&p, &text).unwrap();
    assert!(parse_config(&p).is_ok());
    assert!(matches!(parse_config(&dir.path().join("missing")), Err(drbf::Error::Io(_))));
}

#[test]
fn container_round_trip_is_exact() {
    let mut r = rng(1);
    let c = Container {
        complex: vec![("A".into(), cmat(&mut r, 3, 2) * C64::from(1e-7)), ("B".into(), CMat::zeros(0, 0))],
        real: vec![("K".into(), rmat(&mut r, 2, 4))],
        meta: vec![vec!["note".into(), "x".into(), "1.5".into()]],
    };
    let mut buf = Vec::new();
    c.write_to(&mut buf).unwrap();
    let back = Container::read_from(buf.as_slice()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.meta_value("note").unwrap(), &["x".to_string(), "1.5".to_string()]);
    assert!(back.complex("missing").is_err());
    assert!(Container::read_from("matrix,A,2,2\n1,0,2,0\n".as_bytes()).is_err());
}

#[test]
fn frame_weights_and_estimator_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let data = generate_episode(&cfg, 12, 5).unwrap();
    let p = dir.path().join("frame.csv");
    write_frame(&p, &data.pilots).unwrap();
    assert_eq!(read_frame(&p).unwrap(), data.pilots);
    let bytes = std::fs::read(&p).unwrap();
    write_frame(&p, &data.pilots).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), bytes);

    let mut r = rng(2);
    let bw = BeamformerWeights::new(cmat(&mut r, 2, 5), "dr_dl").with_param("epsilon", 0.25);
    let p = dir.path().join("w.csv");
    write_weights(&p, &bw).unwrap();
    let back = read_weights(&p).unwrap();
    assert_eq!(back.w, bw.w);
    assert_eq!(back.method, "dr_dl");
    assert_eq!(back.param("epsilon"), Some(0.25));

    let spec = median_gaussian(&data.pilots, 0.5);
    let est = fit_kernel_estimator(&data.pilots, &spec, KernelMethod::KdlK, 0.3).unwrap();
    let p = dir.path().join("k.csv");
    write_kernel_estimator(&p, &est).unwrap();
    let back = read_kernel_estimator(&p).unwrap();
    assert_eq!(back, est);
    assert_eq!(predict_block(&back, &data.x_test).unwrap(), predict_block(&est, &data.x_test).unwrap());
}

#[test]
fn results_and_trace_csv() {
    let rows = vec![
        ResultRow { method: "Wiener".into(), pilot_size: 10, metric: MetricName::Mse, value: 3.3, std_err: 0.1, train_time_s: 1e-4, episodes_ok: 5 },
        ResultRow { method: "ZF".into(), pilot_size: 10, metric: MetricName::Mse, value: f64::NAN, std_err: f64::NAN, train_time_s: f64::NAN, episodes_ok: 0 },
    ];
    let mut buf = Vec::new();
    write_results(&mut buf, &rows, None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,pilot_size,metric_name,metric_value,train_time_s,episodes_ok");
    assert_eq!(lines[1], "Wiener,10,mse,3.300000e0,1.000000e-4,5");
    assert_eq!(lines[2], "ZF,10,mse,,,0");
    let mut buf = Vec::new();
    let published = |r: &ResultRow| if r.method == "Wiener" { Some(3.3) } else { None };
    write_results(&mut buf, &rows, Some(&published)).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",paper_value"));
    assert!(text.lines().nth(1).unwrap().ends_with(",3.3"));
    assert!(plot_script(&rows, "results.csv", "t").contains("results.png"));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("trace.csv");
    write_trace(&p, &[TraceRow { iter: 1, objective: 2.0, residual: 0.0 }]).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), "iter,objective,residual\n1,2,0\n");
}

#[test]
fn exported_frame_replays_moments() {
    let dir = tempfile::tempdir().unwrap();
    let h = synthesize_channel(&generate_scene(2, 4, 25, 1).unwrap()).unwrap();
    let s = generate_signals(SignalKind::Qpsk, 2, 20, &CMat::identity(2, 2), 2).unwrap();
    let (x, rv) = transmit(&h, &s, &NoiseSpec::gaussian(0.0), 3).unwrap();
    let f = PilotFrame::new(s, x, h, rv).unwrap();
    let p = dir.path().join("f.csv");
    write_frame(&p, &f).unwrap();
    let g = read_frame(&p).unwrap();
    assert_eq!(
        drbf::moments::estimate_moments(&g).unwrap(),
        drbf::moments::estimate_moments(&f).unwrap()
    );
}
