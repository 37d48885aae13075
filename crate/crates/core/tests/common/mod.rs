#![allow(dead_code)]

use crane_sim::hsmc::{HsmcState, PlantObservation, ReferencePoint};
use crane_sim::plant::{mechanical_energy, PlantParams, PlantState};
use crane_sim::simkit::{integrate_substeps, Integrator};
use proptest::prelude::*;

pub fn observation() -> impl Strategy<Value = PlantObservation> {
    (
        -10.0f64..10.0,
        -5.0f64..5.0,
        -50.0f64..50.0,
        -5.0f64..5.0,
        -1.0f64..1.0,
    )
        .prop_map(|(x, x_dot, x_ddot_prev, w_dot_tip, w_slope_tip)| PlantObservation {
            x,
            x_dot,
            x_ddot_prev,
            w_dot_tip,
            w_slope_tip,
        })
}

pub fn reference() -> impl Strategy<Value = ReferencePoint> {
    (-5.0f64..5.0, -2.0f64..2.0).prop_map(|(x_d, x_d_dot)| ReferencePoint { x_d, x_d_dot })
}

pub fn controller_state() -> impl Strategy<Value = HsmcState> {
    (
        -10.0f64..10.0,
        -10.0f64..10.0,
        -1e4f64..1e4,
        -1e4f64..1e4,
        -1e6f64..0.0,
        any::<bool>(),
    )
        .prop_map(|(int_e1, int_e2, prev_s1, prev_s2, theta_hat, primed)| HsmcState {
            int_e1,
            int_e2,
            prev_s1,
            prev_s2,
            theta_hat,
            primed,
        })
}

pub fn params_with(ei: f64, c: f64, c_d: f64) -> PlantParams {
    PlantParams {
        ei,
        c,
        c_d,
        ..PlantParams::default()
    }
}

pub fn state_from(p: &PlantParams, x_dot: f64, w: &[f64], w_dot: &[f64]) -> PlantState {
    let mut s = PlantState::at_rest(p);
    s.x_dot = x_dot;
    s.w[1..].copy_from_slice(&w[1..]);
    s.w_dot[1..].copy_from_slice(&w_dot[1..]);
    s
}

pub fn smooth_shape(p: &PlantParams, amp: f64) -> Vec<f64> {
    let l = p.length;
    (0..p.n_nodes)
        .map(|i| {
            let y = i as f64 * p.dy();
            amp * (6.0 * l * l * y * y - 4.0 * l * y.powi(3) + y.powi(4)) / (3.0 * l.powi(4))
        })
        .collect()
}

/// Mechanical energy every 0.1 s of an unforced run at h = 1 ms.
pub fn run_energy(p: &PlantParams, s0: PlantState, seconds: f64) -> Vec<f64> {
    let load = vec![0.0; p.n_nodes];
    let mut s = s0;
    let mut energies = vec![mechanical_energy(p, &s)];
    let periods = (seconds / 0.1).round() as usize;
    for _ in 0..periods {
        let (next, _) = integrate_substeps(&s, p, 0.0, &load, 0.1, 100, Integrator::Rk4).unwrap();
        s = next;
        energies.push(mechanical_energy(p, &s));
    }
    energies
}

pub fn relative_drift(energies: &[f64]) -> f64 {
    let e0 = energies[0];
    energies.iter().map(|v| (v - e0).abs()).fold(0.0, f64::max) / e0
}

/// Worst position and velocity deviation over 1 s of a short, very stiff
/// payload from the rigid-body ramp `x = u t² / (2 (m_t + m_r))`.
pub fn rigid_limit_deviation() -> (f64, f64) {
    let p = PlantParams {
        length: 2.0,
        ei: 1e9,
        n_nodes: 5,
        ..PlantParams::default()
    };
    let u = 150.0;
    let a = u / (p.m_t + p.m_r);
    let load = vec![0.0; p.n_nodes];
    let mut s = PlantState::at_rest(&p);
    let mut worst: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for k in 1..=100 {
        let (next, _) =
            integrate_substeps(&s, &p, u, &load, 0.01, 400, Integrator::Rk4).unwrap();
        s = next;
        let t = k as f64 * 0.01;
        worst = worst.max((s.x - 0.5 * a * t * t).abs());
        // the first bending mode rings on top of the ramp, visible in the velocity only
        worst_v = worst_v.max((s.x_dot - a * t).abs());
    }
    (worst, worst_v)
}
