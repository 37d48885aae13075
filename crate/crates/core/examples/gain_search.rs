//! Grid search over the controller parameters that have no published value
//! (`K0`, `Kr1`, `Kr2`, `phi0..2`, `delta`), all other gains fixed at the
//! profile values. Each candidate is scored by how many of the following it
//! meets, ties broken by undisturbed MSE:
//!
//! * undisturbed run: final |e1| < 0.02 m, every |s_i(T)| < 5% of its maximum,
//!   no per-step increase of V after the reference rise;
//! * actuator at its bound in < 20% of steps in every scenario;
//! * |e1| < 0.05 m at 9.5, 19.5 and 29.5 s in each switching campaign;
//! * chattering energy at most 0.6 of the sign-reaching variant under `high`.
//!
//! Usage: `cargo run --release --example gain_search [config]`. Grids can be
//! overridden with comma lists in `K0`, `KR1`, `KR2`, `PHI0`, `PHI1`, `PHI2`,
//! `DELTA`.

use crane_sim::cli::{run_cell, Cell};
use crane_sim::config::ExperimentConfig;
use crane_sim::simkit::EpisodeResult;
use rayon::prelude::*;

fn grid(name: &str, default: &str) -> Vec<f64> {
    std::env::var(name)
        .unwrap_or_else(|_| default.into())
        .split(',')
        .map(|s| s.trim().parse().expect("number"))
        .collect()
}

fn surface_ratio(r: &EpisodeResult) -> f64 {
    let last = r.trace.last().unwrap();
    let ratio = |f: fn(&crane_sim::simkit::TraceRow) -> f64| {
        let max = r.trace.iter().map(|x| f(x).abs()).fold(0.0, f64::max);
        if max == 0.0 {
            0.0
        } else {
            f(last).abs() / max
        }
    };
    ratio(|x| x.s0).max(ratio(|x| x.s1)).max(ratio(|x| x.s2))
}

fn v_violations(r: &EpisodeResult, after: f64) -> usize {
    r.trace
        .windows(2)
        .filter(|w| w[0].t >= after - 1e-9 && w[1].v - w[0].v > 1e-6)
        .count()
}

fn main() {
    let base = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref()).expect("config"),
        None => ExperimentConfig::default_profile(),
    };
    let mut candidates = Vec::new();
    for k0 in grid("K0", "0.001,0.002,0.003,0.005,0.01") {
        for kr1 in grid("KR1", "0.4,0.5,0.6,0.7,0.8") {
            for kr2 in grid("KR2", "0,0.01") {
                for phi0 in grid("PHI0", "0.5,1,3,10") {
                    for phi1 in grid("PHI1", "2,3,5,10") {
                        for phi2 in grid("PHI2", "10,30,100,300") {
                            for delta in grid("DELTA", "0.05") {
                                candidates.push([k0, kr1, kr2, phi0, phi1, phi2, delta]);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut scored: Vec<_> = candidates
        .par_iter()
        .map(|c| {
            let mut cfg = base.clone();
            let g = &mut cfg.gains;
            [g.k0, g.kr1, g.kr2, g.phi0, g.phi1, g.phi2, g.delta] = *c;
            let run = |controller: &str, scenario: &str| {
                run_cell(
                    &cfg,
                    &Cell { controller: controller.into(), scenario: scenario.into(), seed: 1 },
                )
            };
            let runs: Result<Vec<_>, _> = ["none", "low", "high", "random"]
                .iter()
                .map(|s| run("hsmc", s))
                .collect();
            let Ok(runs) = runs else {
                return (*c, 0, usize::MAX, f64::INFINITY, "blow-up".to_string());
            };
            let none = &runs[0];
            let final_error = none.trace.last().unwrap().e1.abs();
            let ratio = surface_ratio(none);
            let rise = base.references.step.first_rise_end();
            let violations = v_violations(none, rise);
            let sat = runs
                .iter()
                .map(|r| r.saturation_fraction(cfg.gains.u_min, cfg.gains.u_max))
                .fold(0.0, f64::max);
            let mut switch_error: f64 = 0.0;
            for s in ["switch-low", "switch-high", "switch-random"] {
                match run("hsmc", s) {
                    Ok(r) => {
                        for t in [9.5, 19.5, 29.5] {
                            switch_error = switch_error.max(r.row_at(t).unwrap().e1.abs());
                        }
                    }
                    Err(_) => switch_error = f64::INFINITY,
                }
            }
            let chatter = run("hsmc-sign", "high")
                .map(|s| runs[2].metrics.chattering_energy / s.metrics.chattering_energy)
                .unwrap_or(f64::INFINITY);
            let score = [
                final_error < 0.02,
                ratio < 0.05,
                violations == 0,
                sat < 0.2,
                switch_error < 0.05,
                chatter <= 0.6,
            ]
            .iter()
            .filter(|&&b| b)
            .count();
            let mse = none.metrics.mse;
            let detail = format!(
                "final={final_error:.4} ratio={ratio:.3} v_up={violations} sat={sat:.2} \
                 switch={switch_error:.4} chatter={chatter:.3} mse={mse:.5}"
            );
            (*c, score, violations, mse, detail)
        })
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.3.total_cmp(&b.3)).then(a.2.cmp(&b.2)));
    println!("[K0, Kr1, Kr2, phi0, phi1, phi2, delta]  ({} candidates)", scored.len());
    for (c, score, _, _, detail) in scored.iter().take(20) {
        println!("{c:?} score={score}/6 {detail}");
    }
}
