//! Acceptance checks for the shipped default profile. Prints one PASS/FAIL line
//! per criterion and exits non-zero if any of them fails.

mod common;

use std::time::Instant;

use crane_sim::baselines::{lqr_design, LinearModel};
use crane_sim::cli::{emit_trace_csv, plan, run_cell, run_cells, Cell, RunOptions, Suite};
use crane_sim::config::ExperimentConfig;
use crane_sim::hsmc::{control_step, sat, switching_sigma};
use crane_sim::neurocomp::{NnCompensator, NnInput, NnParams};
use crane_sim::simkit::{EpisodeResult, TraceRow};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FUZZ_CASES: u32 = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn episode(cfg: &ExperimentConfig, controller: &str, scenario: &str, seed: u64) -> EpisodeResult {
    let cell = Cell { controller: controller.into(), scenario: scenario.into(), seed };
    run_cell(cfg, &cell).unwrap_or_else(|e| panic!("{controller}/{scenario}: {e}"))
}

fn ordering(cfg: &ExperimentConfig) -> Outcome {
    let opts = RunOptions { suite: Some(Suite::Table5), ..RunOptions::default() };
    let cells = plan(cfg, &opts);
    let start = Instant::now();
    let outcomes = run_cells(cfg, &cells, 1);
    let elapsed = start.elapsed().as_secs_f64();
    let mse = |controller: &str, scenario: &str| {
        outcomes
            .iter()
            .find(|o| o.cell.controller == controller && o.cell.scenario == scenario)
            .and_then(|o| o.result.as_ref().ok())
            .map_or(f64::INFINITY, |r| r.metrics.mse)
    };
    let mut pass = elapsed < 120.0;
    let mut parts = Vec::new();
    for scenario in ["low", "high", "random"] {
        let (h, p, l) = (mse("hsmc", scenario), mse("pid", scenario), mse("lqr", scenario));
        pass &= 2.0 * h <= p && p < l;
        parts.push(format!("{scenario}: hsmc={h:.3e} pid={p:.3e} lqr={l:.3e}"));
    }
    parts.push(format!("9 cells in {elapsed:.1} s"));
    outcome(pass, parts.join("; "))
}

fn surface_ratio(trace: &[TraceRow], f: fn(&TraceRow) -> f64) -> f64 {
    let max = trace.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    f(trace.last().unwrap()).abs() / max
}

fn tracking(none: &EpisodeResult) -> Outcome {
    let last = none.trace.last().unwrap();
    let ratios = [
        surface_ratio(&none.trace, |r| r.s0),
        surface_ratio(&none.trace, |r| r.s1),
        surface_ratio(&none.trace, |r| r.s2),
    ];
    let pass = last.e1.abs() < 0.02 && ratios.iter().all(|&r| r < 0.05);
    outcome(
        pass,
        format!(
            "final |e1| = {:.2e} m at t = {:.1} s; |s_i(T)|/max = {:.3}, {:.3}, {:.3}",
            last.e1.abs(),
            last.t,
            ratios[0],
            ratios[1],
            ratios[2]
        ),
    )
}

fn switching(cfg: &ExperimentConfig) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for scenario in ["switch-low", "switch-high", "switch-random"] {
        let r = episode(cfg, "hsmc", scenario, 1);
        let errors: Vec<f64> = [9.5, 19.5, 29.5]
            .iter()
            .map(|&t| r.row_at(t).map_or(f64::INFINITY, |row| row.e1.abs()))
            .collect();
        pass &= errors.iter().all(|&e| e < 0.05);
        parts.push(format!(
            "{scenario}: {:.3} / {:.3} / {:.3}",
            errors[0], errors[1], errors[2]
        ));
    }
    outcome(pass, format!("|e1| at 9.5/19.5/29.5 s: {}", parts.join("; ")))
}

fn lyapunov(cfg: &ExperimentConfig, none: &EpisodeResult) -> Outcome {
    let rise = cfg.references.step.first_rise_end();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for pair in none.trace.windows(2).filter(|w| w[0].t >= rise - 1e-9) {
        let inc = pair[1].v - pair[0].v;
        worst = worst.max(inc);
        if inc > 1e-6 {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} steps after t = {rise} s rise by more than 1e-6; largest rise {worst:.3e}"),
    )
}

fn chattering(cfg: &ExperimentConfig) -> Outcome {
    let smooth = episode(cfg, "hsmc", "high", 1).metrics.chattering_energy;
    let sign = episode(cfg, "hsmc-sign", "high", 1).metrics.chattering_energy;
    let ratio = smooth / sign;
    outcome(
        ratio <= 0.6,
        format!("sat {smooth:.4e} vs sign {sign:.4e}, ratio {ratio:.3}"),
    )
}

fn plant_numerics() -> Outcome {
    let mut drifts = Vec::new();
    for ei in [1e4, 2e6] {
        let p = common::params_with(ei, 0.0, 0.0);
        let w = common::smooth_shape(&p, 0.2);
        let s = common::state_from(&p, 0.1, &w, &vec![0.0; p.n_nodes]);
        drifts.push(common::relative_drift(&common::run_energy(&p, s, 20.0)));
    }
    let (position, _) = common::rigid_limit_deviation();
    let pass = drifts.iter().all(|&d| d < 5e-3) && position < 1e-6;
    outcome(
        pass,
        format!(
            "energy drift {:.2e} (EI 1e4), {:.2e} (EI 2e6); rigid-limit position error {position:.2e} m",
            drifts[0], drifts[1]
        ),
    )
}

fn nn_gradient() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = NnParams { rng_seed: seed, ..NnParams::default() };
        let mut net = NnCompensator::new(&params, 0.05).unwrap();
        for w in net.w_out.iter_mut() {
            *w = rng.random_range(-5.0..5.0);
        }
        let input = NnInput {
            x: rng.random_range(-3.0..3.0),
            x_dot: rng.random_range(-3.0..3.0),
            w_tip: rng.random_range(-3.0..3.0),
            w_dot_tip: rng.random_range(-3.0..3.0),
        };
        let grad = net.grad_output_weights(&input);
        let h = 1e-5;
        for (i, g) in grad.iter().enumerate() {
            let mut plus = net.clone();
            plus.w_out[i] += h;
            let mut minus = net.clone();
            minus.w_out[i] -= h;
            let fd = (plus.forward(&input) - minus.forward(&input)) / (2.0 * h);
            worst = worst.max((fd - g).abs() / g.abs().max(fd.abs()).max(1e-3));
        }
    }
    outcome(worst < 1e-6, format!("worst relative error {worst:.2e} over 100 cases"))
}

fn fuzz<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config { cases: FUZZ_CASES, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn property_suites(cfg: &ExperimentConfig) -> Outcome {
    let sat_result = fuzz((-1e6f64..1e6, 1e-3f64..1e3), |(v, phi)| {
        let a = sat(v, phi).unwrap();
        prop_assert!(a.abs() < 1.0);
        prop_assert_eq!(sat(-v, phi).unwrap(), -a);
        Ok(())
    });
    let gains = cfg.gains.clone();
    let clamp_result = fuzz(
        (
            common::observation(),
            common::reference(),
            common::controller_state(),
            -1e4f64..1e4,
        ),
        |(obs, reference, state, u_nn)| {
            let (b, _) = control_step(&obs, &reference, &state, &gains, u_nn, 0.1).unwrap();
            prop_assert!(b.u_total >= gains.u_min && b.u_total <= gains.u_max);
            Ok(())
        },
    );
    let band_gains = cfg.gains.clone();
    let switch_result = fuzz((-10.0f64..10.0, 1e-3f64..10.0), |(s0, delta)| {
        let mut g = band_gains.clone();
        g.delta = delta;
        let expected = if s0.abs() <= delta { g.alpha2 } else { g.alpha1 };
        prop_assert_eq!(switching_sigma(s0, &g), expected);
        Ok(())
    });
    let results = [("sat", sat_result), ("clamp", clamp_result), ("switching", switch_result)];
    let pass = results.iter().all(|(_, r)| r.is_ok());
    let detail = results
        .iter()
        .map(|(name, r)| match r {
            Ok(()) => format!("{name}: 0 violations in {FUZZ_CASES}"),
            Err(e) => format!("{name}: {e}"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn lqr_oracle(cfg: &ExperimentConfig) -> Outcome {
    let di = LinearModel {
        a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        b: DVector::from_vec(vec![0.0, 1.0]),
    };
    let d = lqr_design(&di, &DMatrix::identity(2, 2), 1.0).unwrap();
    let k_err = (d.k[0] - 1.0).abs().max((d.k[1] - 3f64.sqrt()).abs());
    let w = &cfg.baselines.lqr;
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&w.q));
    let crane = lqr_design(&LinearModel::crane(&cfg.plant), &q, w.r).unwrap();
    let residual = crane.residual_norm();
    outcome(
        k_err < 1e-8 && residual < 1e-8,
        format!("double-integrator |K - [1, sqrt 3]| = {k_err:.1e}; crane Riccati residual {residual:.1e}"),
    )
}

fn determinism(cfg: &ExperimentConfig) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for controller in ["hsmc", "hsmc-sign", "pid", "lqr"] {
        for (scenario, seed) in [("random", 11), ("switch-random", 12), ("high", 13)] {
            let cell = Cell { controller: controller.into(), scenario: scenario.into(), seed };
            let a = dir.path().join(format!("{controller}_{scenario}_a.csv"));
            let b = dir.path().join(format!("{controller}_{scenario}_b.csv"));
            emit_trace_csv(&run_cell(cfg, &cell).unwrap(), &a, None).unwrap();
            emit_trace_csv(&run_cell(cfg, &cell).unwrap(), &b, None).unwrap();
            if std::fs::read(&a).unwrap() != std::fs::read(&b).unwrap() {
                mismatches.push(format!("{controller}/{scenario}"));
            }
            checked += 1;
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{checked} (controller, scenario, seed) pairs, mismatches: [{}]", mismatches.join(", ")),
    )
}

fn main() {
    let cfg = ExperimentConfig::default_profile();
    let none = episode(&cfg, "hsmc", "none", 1);
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("controller ordering", Box::new(|| ordering(&cfg))),
        ("no-disturbance tracking", Box::new(|| tracking(&none))),
        ("target switching", Box::new(|| switching(&cfg))),
        ("Lyapunov trace", Box::new(|| lyapunov(&cfg, &none))),
        ("chattering reduction", Box::new(|| chattering(&cfg))),
        ("plant numerics", Box::new(plant_numerics)),
        ("NN gradient", Box::new(nn_gradient)),
        ("sat/clamp/switching properties", Box::new(|| property_suites(&cfg))),
        ("LQR oracle", Box::new(|| lqr_oracle(&cfg))),
        ("determinism", Box::new(|| determinism(&cfg))),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
