//! Closed-loop episode runner.
//!
//! The controller runs at a fixed period `dt_ctrl`. Between samples the
//! force and the disturbance are held constant while the plant advances with
//! `substeps` fixed integration steps. The controller sees the trolley
//! acceleration reported at the end of the previous period.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baselines::{self, LinearModel, LqrDesign, LqrWeights, PidGains, PidState};
use crate::error::{Error, Result};
use crate::hsmc::{self, HsmcGains, HsmcState, PlantObservation};
use crate::neurocomp::{NnCompensator, NnInput, NnParams};
use crate::plant::{plant_derivatives, PlantDerivative, PlantParams, PlantState};
use crate::scenarios::{disturbance_force, ReferenceSpec, Scenario};

const BLOWUP_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt_ctrl: f64,
    pub substeps: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub integrator: Integrator,
    /// Trace columns to write; all columns when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_fields: Option<Vec<String>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_ctrl: 0.1,
            substeps: 100,
            horizon: 20.0,
            integrator: Integrator::Rk4,
            record_fields: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_ctrl > 0.0 && self.dt_ctrl.is_finite()) {
            return Err(Error::invalid("dt_ctrl", "must be > 0"));
        }
        if self.substeps == 0 {
            return Err(Error::invalid("substeps", "must be >= 1"));
        }
        if !(self.horizon >= self.dt_ctrl) {
            return Err(Error::invalid("T", "must be at least one controller period"));
        }
        if let Some(fields) = &self.record_fields {
            for f in fields {
                if !TRACE_COLUMNS.contains(&f.as_str()) {
                    return Err(Error::invalid(
                        "record_fields",
                        format!("unknown trace column `{f}`"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of controller periods in a horizon.
    pub fn periods(&self, horizon: f64) -> usize {
        (horizon / self.dt_ctrl + 1e-9).floor() as usize
    }
}

fn advance(state: &PlantState, d: &PlantDerivative, h: f64) -> PlantState {
    PlantState {
        x: state.x + h * d.x_dot,
        x_dot: state.x_dot + h * d.x_ddot,
        w: state.w.iter().zip(&d.w_dot).map(|(w, v)| w + h * v).collect(),
        w_dot: state
            .w_dot
            .iter()
            .zip(&d.w_ddot)
            .map(|(v, a)| v + h * a)
            .collect(),
        t: state.t + h,
    }
}

fn rk4_step(
    state: &PlantState,
    params: &PlantParams,
    u: f64,
    delta_f: &[f64],
    h: f64,
) -> Result<PlantState> {
    let k1 = plant_derivatives(state, params, u, delta_f)?;
    let k2 = plant_derivatives(&advance(state, &k1, 0.5 * h), params, u, delta_f)?;
    let k3 = plant_derivatives(&advance(state, &k2, 0.5 * h), params, u, delta_f)?;
    let k4 = plant_derivatives(&advance(state, &k3, h), params, u, delta_f)?;
    let w6 = h / 6.0;
    let combine = |a: f64, b: f64, c: f64, d: f64| w6 * (a + 2.0 * b + 2.0 * c + d);
    let n = state.w.len();
    let mut next = state.clone();
    next.x += combine(k1.x_dot, k2.x_dot, k3.x_dot, k4.x_dot);
    next.x_dot += combine(k1.x_ddot, k2.x_ddot, k3.x_ddot, k4.x_ddot);
    for j in 0..n {
        next.w[j] += combine(k1.w_dot[j], k2.w_dot[j], k3.w_dot[j], k4.w_dot[j]);
        next.w_dot[j] += combine(k1.w_ddot[j], k2.w_ddot[j], k3.w_ddot[j], k4.w_ddot[j]);
    }
    next.t = state.t + h;
    Ok(next)
}

fn semi_implicit_euler_step(
    state: &PlantState,
    params: &PlantParams,
    u: f64,
    delta_f: &[f64],
    h: f64,
) -> Result<PlantState> {
    let d = plant_derivatives(state, params, u, delta_f)?;
    let x_dot = state.x_dot + h * d.x_ddot;
    let w_dot: Vec<f64> = state
        .w_dot
        .iter()
        .zip(&d.w_ddot)
        .map(|(v, a)| v + h * a)
        .collect();
    Ok(PlantState {
        x: state.x + h * x_dot,
        x_dot,
        w: state.w.iter().zip(&w_dot).map(|(w, v)| w + h * v).collect(),
        w_dot,
        t: state.t + h,
    })
}

/// Advances the plant over one controller period with `u` and `delta_f`
/// held. Returns the new state and the trolley acceleration evaluated there.
pub fn integrate_substeps(
    state: &PlantState,
    params: &PlantParams,
    u: f64,
    delta_f: &[f64],
    dt_ctrl: f64,
    substeps: usize,
    integrator: Integrator,
) -> Result<(PlantState, f64)> {
    let substeps = substeps.max(1);
    let h = dt_ctrl / substeps as f64;
    let t0 = state.t;
    let mut current = state.clone();
    for i in 0..substeps {
        current = match integrator {
            Integrator::Rk4 => rk4_step(&current, params, u, delta_f, h)?,
            Integrator::SemiImplicitEuler => {
                semi_implicit_euler_step(&current, params, u, delta_f, h)?
            }
        };
        current.t = t0 + (i + 1) as f64 * h;
        let (field, value) = current.max_magnitude();
        if !(value <= BLOWUP_LIMIT) {
            return Err(Error::NumericalBlowup {
                t: current.t,
                field,
                value,
            });
        }
    }
    current.t = t0 + dt_ctrl;
    let x_ddot = plant_derivatives(&current, params, u, delta_f)?.x_ddot;
    Ok((current, x_ddot))
}

/// Which control law closes the loop.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Hsmc { gains: HsmcGains, nn: NnParams },
    Pid(PidGains),
    Lqr(LqrDesign),
}

impl ControllerSpec {
    /// LQR designed on the reduced crane model.
    pub fn lqr_for(params: &PlantParams, weights: &LqrWeights) -> Result<Self> {
        let model = LinearModel::crane(params);
        let q = DMatrix::from_diagonal(&DVector::from_row_slice(&weights.q));
        let design =
            baselines::lqr_design(&model, &q, weights.r)?.with_limits(weights.u_min, weights.u_max);
        Ok(ControllerSpec::Lqr(design))
    }

    pub fn label(&self) -> &'static str {
        match self {
            ControllerSpec::Hsmc { .. } => "hsmc",
            ControllerSpec::Pid(_) => "pid",
            ControllerSpec::Lqr(_) => "lqr",
        }
    }
}

pub const TRACE_COLUMNS: [&str; 18] = [
    "t",
    "x",
    "x_d",
    "e1",
    "w_tip",
    "w_dot_tip",
    "s0",
    "s1",
    "s2",
    "u_sm0",
    "u_sm1",
    "u_sm2",
    "u_ad",
    "u_nn",
    "u_total",
    "sigma",
    "theta_hat",
    "V",
];

/// One controller sample. `e1 = x − x_d`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub x_d: f64,
    pub e1: f64,
    pub w_tip: f64,
    pub w_dot_tip: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub u_sm0: f64,
    pub u_sm1: f64,
    pub u_sm2: f64,
    pub u_ad: f64,
    pub u_nn: f64,
    pub u_total: f64,
    pub sigma: f64,
    pub theta_hat: f64,
    pub v: f64,
}

impl TraceRow {
    /// Values in [`TRACE_COLUMNS`] order.
    pub fn values(&self) -> [f64; 18] {
        [
            self.t,
            self.x,
            self.x_d,
            self.e1,
            self.w_tip,
            self.w_dot_tip,
            self.s0,
            self.s1,
            self.s2,
            self.u_sm0,
            self.u_sm1,
            self.u_sm2,
            self.u_ad,
            self.u_nn,
            self.u_total,
            self.sigma,
            self.theta_hat,
            self.v,
        ]
    }

    pub fn column(&self, name: &str) -> Option<f64> {
        TRACE_COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.values()[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSummary {
    /// Mean of `e1²` over every sample of the episode (m²).
    pub mse: f64,
    /// Largest `|e1|` once the first reference rise has completed (m).
    pub max_error: f64,
    /// Start of the final stretch inside the 2 % band; `None` if the last
    /// sample is still outside.
    pub response_time: Option<f64>,
    pub chattering_energy: f64,
    pub control_effort: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub controller: String,
    pub scenario: String,
    pub trace: Vec<TraceRow>,
    pub metrics: MetricsSummary,
    pub final_state: PlantState,
    pub final_theta_hat: f64,
    /// Weight snapshot of the compensator at the end of the episode.
    pub final_weights: Option<Vec<f64>>,
}

impl EpisodeResult {
    /// Fraction of samples with the force at either bound.
    pub fn saturation_fraction(&self, u_min: f64, u_max: f64) -> f64 {
        if self.trace.is_empty() {
            return 0.0;
        }
        let hits = self
            .trace
            .iter()
            .filter(|r| r.u_total >= u_max || r.u_total <= u_min)
            .count();
        hits as f64 / self.trace.len() as f64
    }

    pub fn row_at(&self, t: f64) -> Option<&TraceRow> {
        self.trace
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

/// Composite energy-like function of the surfaces and the adaptive states.
pub fn lyapunov_candidate(
    s0: f64,
    s1: f64,
    s2: f64,
    gains: &HsmcGains,
    theta_hat: f64,
    w_out: &[f64],
    w_out_ref: &[f64],
) -> f64 {
    let weights: f64 = w_out
        .iter()
        .zip(w_out_ref)
        .map(|(w, r)| (w - r) * (w - r))
        .sum();
    0.5 * (gains.ks0 * s0 * s0 + gains.ks1 * s1 * s1 + gains.ks2 * s2 * s2)
        + 0.5 * theta_hat * theta_hat
        + 0.5 * weights
}

pub fn compute_metrics(
    trace: &[TraceRow],
    reference: &ReferenceSpec,
    dt_ctrl: f64,
) -> Result<MetricsSummary> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let n = trace.len() as f64;
    let mse = trace.iter().map(|r| r.e1 * r.e1).sum::<f64>() / n;

    let rise_end = reference.first_rise_end();
    let max_error = trace
        .iter()
        .filter(|r| r.t >= rise_end - 1e-9)
        .map(|r| r.e1.abs())
        .fold(0.0, f64::max);

    let band = 0.02 * reference.final_target().abs();
    let response_time = match trace.iter().rposition(|r| r.e1.abs() > band) {
        None => Some(trace[0].t),
        Some(last_out) if last_out + 1 < trace.len() => Some(trace[last_out + 1].t),
        Some(_) => None,
    };

    let chattering_energy = trace
        .windows(2)
        .map(|w| (w[1].u_total - w[0].u_total).powi(2))
        .sum();
    let control_effort = trace.iter().map(|r| r.u_total * r.u_total * dt_ctrl).sum();

    Ok(MetricsSummary {
        mse,
        max_error,
        response_time,
        chattering_energy,
        control_effort,
    })
}

enum Runtime {
    Hsmc {
        gains: HsmcGains,
        state: HsmcState,
        nn: NnCompensator,
    },
    Pid {
        gains: PidGains,
        state: PidState,
    },
    Lqr(LqrDesign),
}

struct Sample {
    breakdown: hsmc::ControlBreakdown,
    theta_hat: f64,
    w_out: Vec<f64>,
}

impl Runtime {
    fn new(spec: &ControllerSpec) -> Result<Self> {
        Ok(match spec {
            ControllerSpec::Hsmc { gains, nn } => {
                gains.validate()?;
                Runtime::Hsmc {
                    gains: gains.clone(),
                    state: HsmcState::default(),
                    nn: NnCompensator::new(nn, gains.delta)?,
                }
            }
            ControllerSpec::Pid(gains) => {
                gains.validate()?;
                Runtime::Pid {
                    gains: gains.clone(),
                    state: PidState::default(),
                }
            }
            ControllerSpec::Lqr(design) => Runtime::Lqr(design.clone()),
        })
    }

    fn step(
        &mut self,
        obs: &PlantObservation,
        w_tip: f64,
        reference: &hsmc::ReferencePoint,
        dt: f64,
    ) -> Result<Sample> {
        match self {
            Runtime::Hsmc { gains, state, nn } => {
                let input = NnInput {
                    x: obs.x,
                    x_dot: obs.x_dot,
                    w_tip,
                    w_dot_tip: obs.w_dot_tip,
                };
                let u_nn = nn.forward(&input);
                let theta_hat = state.theta_hat;
                let w_out = nn.w_out.clone();
                let (breakdown, next) = hsmc::control_step(obs, reference, state, gains, u_nn, dt)?;
                nn.weight_update(breakdown.s0, &input, dt);
                *state = next;
                Ok(Sample {
                    breakdown,
                    theta_hat,
                    w_out,
                })
            }
            Runtime::Pid { gains, state } => {
                let u = baselines::pid_step(gains, reference.x_d - obs.x, dt, state);
                Ok(Sample::plain(u))
            }
            Runtime::Lqr(design) => {
                let u = baselines::lqr_step(
                    design,
                    &[obs.x, obs.x_dot, w_tip, obs.w_dot_tip],
                    &[reference.x_d, reference.x_d_dot, 0.0, 0.0],
                );
                Ok(Sample::plain(u))
            }
        }
    }
}

impl Sample {
    fn plain(u: f64) -> Self {
        Sample {
            breakdown: hsmc::ControlBreakdown {
                u_total: u,
                ..Default::default()
            },
            theta_hat: 0.0,
            w_out: Vec::new(),
        }
    }
}

/// Runs one closed-loop episode from rest.
pub fn run_episode(
    params: &PlantParams,
    controller: &ControllerSpec,
    scenario: &Scenario,
    sim: &SimConfig,
) -> Result<EpisodeResult> {
    params.validate()?;
    sim.validate()?;
    scenario.disturbance.validate()?;
    scenario.reference.validate()?;

    let horizon = scenario.horizon(sim.horizon);
    let periods = sim.periods(horizon);
    let dt = sim.dt_ctrl;
    let dy = params.dy();

    let mut runtime = Runtime::new(controller)?;
    let mut state = PlantState::at_rest(params);
    let mut x_ddot_prev = 0.0;
    let mut trace = Vec::with_capacity(periods + 1);
    let mut weight_history = Vec::with_capacity(periods + 1);

    for k in 0..=periods {
        let t = k as f64 * dt;
        let obs = PlantObservation {
            x: state.x,
            x_dot: state.x_dot,
            x_ddot_prev,
            w_dot_tip: state.w_dot_tip(),
            w_slope_tip: state.w_slope_tip(dy),
        };
        let reference = scenario.reference.reference_clamped(t);
        let sample = runtime.step(&obs, state.w_tip(), &reference, dt)?;
        let b = sample.breakdown;
        trace.push(TraceRow {
            t,
            x: state.x,
            x_d: reference.x_d,
            e1: state.x - reference.x_d,
            w_tip: state.w_tip(),
            w_dot_tip: state.w_dot_tip(),
            s0: b.s0,
            s1: b.s1,
            s2: b.s2,
            u_sm0: b.u_sm0,
            u_sm1: b.u_sm1,
            u_sm2: b.u_sm2,
            u_ad: b.u_ad,
            u_nn: b.u_nn,
            u_total: b.u_total,
            sigma: b.sigma,
            theta_hat: sample.theta_hat,
            v: 0.0,
        });
        weight_history.push(sample.w_out);
        if k == periods {
            break;
        }

        let force = disturbance_force(&scenario.disturbance, t, k as u64);
        let load = params.uniform_load(force);
        state.t = t;
        let (next, x_ddot) = integrate_substeps(
            &state,
            params,
            b.u_total,
            &load,
            dt,
            sim.substeps,
            sim.integrator,
        )?;
        state = next;
        x_ddot_prev = x_ddot;
    }

    let (final_theta_hat, final_weights) = match &runtime {
        Runtime::Hsmc { gains, state, nn } => {
            let w_ref = &nn.w_out;
            for (row, w) in trace.iter_mut().zip(&weight_history) {
                row.v = lyapunov_candidate(row.s0, row.s1, row.s2, gains, row.theta_hat, w, w_ref);
            }
            (state.theta_hat, Some(nn.snapshot()))
        }
        _ => (0.0, None),
    };

    let metrics = compute_metrics(&trace, &scenario.reference, dt)?;
    Ok(EpisodeResult {
        controller: controller.label().to_string(),
        scenario: scenario.name.clone(),
        trace,
        metrics,
        final_state: state,
        final_theta_hat,
        final_weights,
    })
}
