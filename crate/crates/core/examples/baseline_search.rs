//! Grid search for the PID and LQR baselines: each is tuned to minimize the
//! undisturbed step-tracking MSE on the default profile. Candidates that hold
//! the actuator at its bound for 20% or more of the steps, or end more than
//! 2 cm off target, are discarded; the proposed controller meets the same bar.
//!
//! Usage: `cargo run --release --example baseline_search [config]`

use crane_sim::baselines::{LqrWeights, PidGains};
use crane_sim::config::ExperimentConfig;
use crane_sim::scenarios::preset;
use crane_sim::simkit::{run_episode, ControllerSpec};
use rayon::prelude::*;

fn main() {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref()).expect("config"),
        None => ExperimentConfig::default_profile(),
    };
    let scenario = preset("none", &cfg.disturbances, &cfg.references, 1).unwrap();
    let mse = |spec: &ControllerSpec| {
        match run_episode(&cfg.plant, spec, &scenario, &cfg.sim) {
            Ok(r) => {
                let sat = r.saturation_fraction(cfg.gains.u_min, cfg.gains.u_max);
                let final_error = r.trace.last().map_or(f64::INFINITY, |row| row.e1.abs());
                if sat < 0.2 && final_error < 0.02 {
                    r.metrics.mse
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    };

    let mut pid = Vec::new();
    for kp in [50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 3000.0, 5000.0, 8000.0] {
        for ki in [0.0, 5.0, 10.0, 50.0] {
            for kd in [80.0, 300.0, 800.0, 1300.0, 2000.0, 3000.0, 4000.0, 6000.0] {
                pid.push(PidGains { kp, ki, kd, ..cfg.baselines.pid.clone() });
            }
        }
    }
    let mut pid: Vec<_> = pid
        .into_par_iter()
        .map(|g| (mse(&ControllerSpec::Pid(g.clone())), g))
        .collect();
    pid.sort_by(|a, b| a.0.total_cmp(&b.0));
    println!("PID ({} candidates), best first:", pid.len());
    for (m, g) in pid.iter().take(5) {
        println!("  mse={m:.6} kp={} ki={} kd={}", g.kp, g.ki, g.kd);
    }

    let mut lqr = Vec::new();
    for qx in [100.0, 1e3, 1e4, 1e5, 1e6, 1e7] {
        for qv in [10.0, 100.0, 1e3, 1e4, 1e5] {
            for qw in [1.0, 100.0, 1e3, 1e4] {
                for qwd in [1.0, 10.0, 100.0] {
                    for r in [1e-5, 1e-4, 1e-3, 1e-2] {
                        lqr.push(LqrWeights { q: [qx, qv, qw, qwd], r, ..cfg.baselines.lqr.clone() });
                    }
                }
            }
        }
    }
    let mut lqr: Vec<_> = lqr
        .into_par_iter()
        .map(|w| {
            let m = ControllerSpec::lqr_for(&cfg.plant, &w)
                .map(|s| mse(&s))
                .unwrap_or(f64::INFINITY);
            (m, w)
        })
        .collect();
    lqr.sort_by(|a, b| a.0.total_cmp(&b.0));
    println!("LQR ({} candidates), best first:", lqr.len());
    for (m, w) in lqr.iter().take(5) {
        println!("  mse={m:.6} q={:?} r={}", w.q, w.r);
    }
}
