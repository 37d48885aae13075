use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crane_sim::cli::{emit_trace_csv, format_sig};
use crane_sim::config::ExperimentConfig;
use crane_sim::plant::{PlantParams, PlantState};
use crane_sim::simkit::{EpisodeResult, MetricsSummary, TraceRow};
use crane_sim::Error;

fn profile() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default_paper.cfg")
}

fn crane_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crane-sim"))
        .args(args)
        .env("CRANE_SIM_THREADS", "2")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn summary_rows(dir: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(dir.join("summary.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "Controller",
            "Scenario",
            "Seed",
            "MSE",
            "MaxError",
            "ResponseTime",
            "ChatteringEnergy",
            "ControlEffort",
            "Status"
        ]
    );
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

fn write_variant(dir: &Path, edit: impl FnOnce(String) -> String) -> PathBuf {
    let text = edit(std::fs::read_to_string(profile()).unwrap());
    let path = dir.join("variant.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn print_config_is_normalized_and_idempotent() {
    let out = crane_sim(&["run", profile().to_str().unwrap(), "--print-config"]);
    assert!(out.status.success());
    let first = String::from_utf8(out.stdout).unwrap();
    let again = ExperimentConfig::parse(&first).unwrap().to_toml();
    assert_eq!(first, again);

    // published values survive verbatim
    let cfg = ExperimentConfig::parse(&first).unwrap();
    let g = &cfg.gains;
    let published = [
        (g.kp1, 400.0),
        (g.ki1, 5.0),
        (g.kd1, 150.0),
        (g.kp2, 100.0),
        (g.ki2, 5.0),
        (g.kd2, 50.0),
        (g.alpha, 0.2),
        (g.beta, 0.5),
        (g.ks0, 10.0),
        (g.ks1, 10.0),
        (g.ks2, 50.0),
        (g.gamma, 2.5),
        (g.alpha1, 2.0),
        (g.alpha2, 1.0),
        (g.u_min, -200.0),
        (g.u_max, 200.0),
        (cfg.plant.m_t, 100.0),
        (cfg.plant.m_r, 50.0),
        (cfg.plant.diameter, 0.5),
        (cfg.plant.c, 10.0),
        (cfg.plant.rho_w, 1025.0),
        (cfg.plant.c_a, 0.8),
        (cfg.plant.c_d, 0.8),
        (cfg.nn.eta_min, 3e-4),
        (cfg.nn.eta_max, 1.2e-3),
        (cfg.sim.dt_ctrl, 0.1),
        (cfg.sim.horizon, 20.0),
    ];
    for (i, (got, want)) in published.iter().enumerate() {
        assert_eq!(got, want, "entry {i}");
    }
    assert_eq!(cfg.nn.input_size, 4);
    assert_eq!(cfg.nn.hidden_size, 10);
    assert_eq!((g.k_s3, g.k_bend, g.k_w), (Some(4.0), Some(4.0), Some(4.0)));
    assert!(first.contains("K_bend = 4.0"));
}

#[test]
fn single_cell_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = crane_sim(&[
        "run",
        profile().to_str().unwrap(),
        "--scenario",
        "none",
        "--controller",
        "hsmc",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = summary_rows(dir.path());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0..3], ["hsmc", "none", "1"]);
    assert_eq!(rows[0][8], "ok");
    let trace = dir.path().join("hsmc_none_seed1.csv");
    let text = std::fs::read_to_string(trace).unwrap();
    assert_eq!(text.lines().count(), 202);
    assert!(text.ends_with('\n'));
    assert!(dir.path().join("summary.txt").exists());

    // unused gains are flagged once each, and nothing else is
    let stderr = String::from_utf8(out.stderr).unwrap();
    let warned: Vec<&str> = stderr.lines().filter(|l| l.contains("no control law uses it")).collect();
    assert_eq!(warned.len(), 3, "{stderr}");
    for name in ["K_s3", "K_bend", "K_w"] {
        assert!(warned.iter().any(|l| l.contains(&format!("`{name}`"))));
    }
}

#[test]
fn table5_suite_has_nine_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = crane_sim(&[
        "run",
        profile().to_str().unwrap(),
        "--suite",
        "table5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = summary_rows(dir.path());
    assert_eq!(rows.len(), 9);
    for scenario in ["low", "high", "random"] {
        for controller in ["hsmc", "pid", "lqr"] {
            assert!(rows.iter().any(|r| r[0] == controller && r[1] == scenario));
            let f = dir.path().join(format!("{controller}_{scenario}_seed1.csv"));
            assert!(f.exists());
        }
    }
    let txt = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(txt.starts_with("Controller"));
}

#[test]
fn switching_suite_runs_three_campaigns() {
    let dir = tempfile::tempdir().unwrap();
    let out = crane_sim(&[
        "run",
        profile().to_str().unwrap(),
        "--suite",
        "switching",
        "--seed",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = summary_rows(dir.path());
    let scen: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(scen, ["switch-low", "switch-high", "switch-random"]);
    assert!(rows.iter().all(|r| r[0] == "hsmc" && r[2] == "5"));
    let text = std::fs::read_to_string(dir.path().join("hsmc_switch-low_seed5.csv")).unwrap();
    assert_eq!(text.lines().count(), 302);
}

#[test]
fn missing_mandatory_field_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), |t| {
        t.lines().filter(|l| !l.starts_with("phi1")).collect::<Vec<_>>().join("\n")
    });
    let out = crane_sim(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("gains.phi1"), "{err}");
    assert!(err.contains("no published value"), "{err}");
}

#[test]
fn unknown_key_exits_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), |t| t.replace("[sim]\n", "[sim]\nsubstepz = 3\n"));
    let out = crane_sim(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("substepz"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn blowup_exits_2_and_flags_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), |t| t.replace("substeps = 100", "substeps = 1"));
    let out = crane_sim(&[
        "run",
        path.to_str().unwrap(),
        "--scenario",
        "none",
        "--controller",
        "pid",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let rows = summary_rows(dir.path());
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][8], "blowup");
    assert_eq!(rows[0][3], "NA");
}

fn three_row_result() -> EpisodeResult {
    let row = |t: f64, scale: f64| TraceRow {
        t,
        x: 0.1 * scale,
        x_d: 1.0 / 3.0 * scale,
        e1: 0.1 * scale - 1.0 / 3.0 * scale,
        w_tip: -2.5e-7 * scale,
        w_dot_tip: 1.0e-3,
        s0: 12345.6789012,
        s1: -0.000123456789,
        s2: 2.0 / 3.0,
        u_sm0: -9.99750062,
        u_sm1: 0.0,
        u_sm2: 50.0,
        u_ad: -1.5e9,
        u_nn: 1e-12,
        u_total: 200.0,
        sigma: 2.0,
        theta_hat: -0.0025,
        v: 123456789.123,
    };
    EpisodeResult {
        controller: "hsmc".into(),
        scenario: "none".into(),
        trace: vec![row(0.0, 0.0), row(0.1, 1.0), row(0.2, 2.0)],
        metrics: MetricsSummary {
            mse: 0.0,
            max_error: 0.0,
            response_time: None,
            chattering_energy: 0.0,
            control_effort: 0.0,
        },
        final_state: PlantState::at_rest(&PlantParams::default()),
        final_theta_hat: 0.0,
        final_weights: None,
    }
}

#[test]
fn trace_csv_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    emit_trace_csv(&three_row_result(), &path, None).unwrap();
    let got = std::fs::read(&path).unwrap();
    let golden = include_bytes!("golden/trace3.csv");
    assert_eq!(
        String::from_utf8_lossy(&got),
        String::from_utf8_lossy(golden)
    );
}

#[test]
fn trace_csv_column_selection_and_empty_guard() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sel.csv");
    let fields = vec!["t".to_string(), "u_total".to_string()];
    emit_trace_csv(&three_row_result(), &path, Some(&fields)).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,u_total\n0,200\n0.1,200\n0.2,200\n");

    let mut empty = three_row_result();
    empty.trace.clear();
    assert!(matches!(
        emit_trace_csv(&empty, &path, None),
        Err(Error::EmptyTrace)
    ));
    assert_eq!(format_sig(0.1 + 0.2), "0.3");
}
