//! Hierarchical sliding-mode controller.
//!
//! Two subsystem surfaces (trolley position, payload swing) are combined into
//! a global surface `s0 = K0 (s1 + s2)`. Each surface gets a smooth-saturation
//! reaching term, the subsystem surfaces also get a rate-damping term, and an
//! adaptive term `σ Θ̂ s0` with a two-level switching gain σ is added together
//! with the neural compensator output.
//!
//! Tracking errors follow the regulation convention `e1 = x − x_d`, so a
//! positive surface asks for a negative force.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachingLaw {
    /// `v / (|v| + φ)`
    #[default]
    SmoothSat,
    /// Discontinuous `sign(v)`; kept for chattering comparisons.
    Sign,
}

fn default_integral_limit() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsmcGains {
    #[serde(rename = "K0")]
    pub k0: f64,
    #[serde(rename = "Kp1")]
    pub kp1: f64,
    #[serde(rename = "Ki1")]
    pub ki1: f64,
    #[serde(rename = "Kd1")]
    pub kd1: f64,
    #[serde(rename = "Kp2")]
    pub kp2: f64,
    #[serde(rename = "Ki2")]
    pub ki2: f64,
    #[serde(rename = "Kd2")]
    pub kd2: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "Ks0")]
    pub ks0: f64,
    #[serde(rename = "Ks1")]
    pub ks1: f64,
    #[serde(rename = "Ks2")]
    pub ks2: f64,
    #[serde(rename = "Kr1")]
    pub kr1: f64,
    #[serde(rename = "Kr2")]
    pub kr2: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub gamma: f64,
    pub delta: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Anti-windup bound on both error integrals.
    #[serde(default = "default_integral_limit")]
    pub integral_limit: f64,
    #[serde(default)]
    pub reaching: ReachingLaw,
    /// Optional lower bound on Θ̂. Off unless set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_floor: Option<f64>,
    // Listed with the published gains but used by no control term.
    #[serde(rename = "K_s3", default, skip_serializing_if = "Option::is_none")]
    pub k_s3: Option<f64>,
    #[serde(rename = "K_bend", default, skip_serializing_if = "Option::is_none")]
    pub k_bend: Option<f64>,
    #[serde(rename = "K_w", default, skip_serializing_if = "Option::is_none")]
    pub k_w: Option<f64>,
}

impl HsmcGains {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("K0", self.k0),
            ("Kp1", self.kp1),
            ("Ki1", self.ki1),
            ("Kd1", self.kd1),
            ("Kp2", self.kp2),
            ("Ki2", self.ki2),
            ("Kd2", self.kd2),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("Ks0", self.ks0),
            ("Ks1", self.ks1),
            ("Ks2", self.ks2),
            ("Kr1", self.kr1),
            ("Kr2", self.kr2),
            ("gamma", self.gamma),
            ("integral_limit", self.integral_limit),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        for phi in [self.phi0, self.phi1, self.phi2] {
            if !(phi.is_finite() && phi > 0.0) {
                return Err(Error::NonPositivePhi { phi });
            }
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid("delta", format!("must be > 0, got {}", self.delta)));
        }
        if !(self.alpha2 > 0.0 && self.alpha1 >= self.alpha2) {
            return Err(Error::invalid(
                "alpha1",
                format!("need alpha1 >= alpha2 > 0, got {} / {}", self.alpha1, self.alpha2),
            ));
        }
        if !(self.u_min < 0.0 && self.u_max > 0.0) {
            return Err(Error::invalid(
                "u_min",
                format!("need u_min < 0 < u_max, got [{}, {}]", self.u_min, self.u_max),
            ));
        }
        Ok(())
    }

    /// Names of configured gains that no control term reads.
    pub fn unused_gains(&self) -> Vec<&'static str> {
        [
            ("K_s3", self.k_s3),
            ("K_bend", self.k_bend),
            ("K_w", self.k_w),
        ]
        .into_iter()
        .filter_map(|(name, v)| v.map(|_| name))
        .collect()
    }

    fn reach(&self, v: f64, phi: f64) -> Result<f64> {
        match self.reaching {
            ReachingLaw::SmoothSat => sat(v, phi),
            ReachingLaw::Sign => {
                if phi <= 0.0 {
                    return Err(Error::NonPositivePhi { phi });
                }
                Ok(if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                })
            }
        }
    }
}

/// Runtime memory of the controller. Starts at zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HsmcState {
    pub int_e1: f64,
    pub int_e2: f64,
    pub prev_s1: f64,
    pub prev_s2: f64,
    pub theta_hat: f64,
    /// False until the first step has stored surface values.
    pub primed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControlBreakdown {
    pub u_sm0: f64,
    pub u_sm1: f64,
    pub u_sm2: f64,
    pub u_ad: f64,
    pub u_nn: f64,
    pub u_total: f64,
    pub sigma: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
}

/// Measurements available to the controller at a sample instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlantObservation {
    pub x: f64,
    pub x_dot: f64,
    /// Trolley acceleration reported at the end of the previous period.
    pub x_ddot_prev: f64,
    pub w_dot_tip: f64,
    pub w_slope_tip: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReferencePoint {
    pub x_d: f64,
    pub x_d_dot: f64,
}

/// Smooth saturation `v / (|v| + φ)`.
pub fn sat(v: f64, phi: f64) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(Error::NonPositivePhi { phi });
    }
    Ok(v / (v.abs() + phi))
}

pub fn surface_s1(e1: f64, int_e1: f64, e1_dot: f64, gains: &HsmcGains) -> f64 {
    gains.kp1 * e1 + gains.ki1 * int_e1 + gains.kd1 * e1_dot
}

/// Swing surface. `e2` must equal `-w_dot_tip`.
pub fn surface_s2(
    e2: f64,
    int_e2: f64,
    x_ddot: f64,
    w_dot_tip: f64,
    w_slope_tip: f64,
    gains: &HsmcGains,
) -> Result<f64> {
    if (e2 + w_dot_tip).abs() > 1e-12 {
        return Err(Error::InconsistentVelocityError { e2, w_dot_tip });
    }
    Ok(gains.kp2 * e2
        + gains.ki2 * int_e2
        + gains.kd2 * (x_ddot - w_dot_tip)
        + gains.alpha * x_ddot
        + gains.beta * w_slope_tip)
}

pub fn surface_s0(s1: f64, s2: f64, k0: f64) -> f64 {
    k0 * (s1 + s2)
}

/// High gain level outside the `δ` band, nominal level on and inside it.
pub fn switching_sigma(s0: f64, gains: &HsmcGains) -> f64 {
    if s0.abs() > gains.delta {
        gains.alpha1
    } else {
        gains.alpha2
    }
}

/// Explicit Euler step of `dΘ̂/dt = −γ s0²`.
pub fn adaptive_update(theta_hat: f64, s0: f64, gamma: f64, dt: f64) -> f64 {
    theta_hat - gamma * s0 * s0 * dt
}

fn check_finite(obs: &PlantObservation, reference: &ReferencePoint, u_nn: f64) -> Result<()> {
    let fields = [
        ("x", obs.x),
        ("x_dot", obs.x_dot),
        ("x_ddot_prev", obs.x_ddot_prev),
        ("w_dot_tip", obs.w_dot_tip),
        ("w_slope_tip", obs.w_slope_tip),
        ("x_d", reference.x_d),
        ("x_d_dot", reference.x_d_dot),
        ("u_nn", u_nn),
    ];
    for (field, value) in fields {
        if !value.is_finite() {
            return Err(Error::ObservationNotFinite { field, value });
        }
    }
    Ok(())
}

/// One controller sample: surfaces, reaching laws, adaptive term and the
/// clamped total force, plus the advanced controller memory.
pub fn control_step(
    obs: &PlantObservation,
    reference: &ReferencePoint,
    state: &HsmcState,
    gains: &HsmcGains,
    u_nn: f64,
    dt: f64,
) -> Result<(ControlBreakdown, HsmcState)> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    check_finite(obs, reference, u_nn)?;

    let e1 = obs.x - reference.x_d;
    let e1_dot = obs.x_dot - reference.x_d_dot;
    let e2 = -obs.w_dot_tip;

    let s1 = surface_s1(e1, state.int_e1, e1_dot, gains);
    let s2 = surface_s2(
        e2,
        state.int_e2,
        obs.x_ddot_prev,
        obs.w_dot_tip,
        obs.w_slope_tip,
        gains,
    )?;
    let s0 = surface_s0(s1, s2, gains.k0);

    let (s1_dot, s2_dot) = if state.primed {
        ((s1 - state.prev_s1) / dt, (s2 - state.prev_s2) / dt)
    } else {
        (0.0, 0.0)
    };

    let u_sm0 = -gains.ks0 * gains.reach(s0 / gains.phi0, gains.phi0)?;
    let u_sm1 = -gains.ks1 * gains.reach(s1 / gains.phi1, gains.phi1)? - gains.kr1 * s1_dot;
    let u_sm2 = -gains.ks2 * gains.reach(s2 / gains.phi2, gains.phi2)? - gains.kr2 * s2_dot;
    let u_ad = state.theta_hat * s0;
    let sigma = switching_sigma(s0, gains);
    let u_total = (u_sm0 + u_sm1 + u_sm2 + sigma * u_ad + u_nn).clamp(gains.u_min, gains.u_max);

    let lim = gains.integral_limit;
    let mut theta_hat = adaptive_update(state.theta_hat, s0, gains.gamma, dt);
    if let Some(floor) = gains.theta_floor {
        theta_hat = theta_hat.max(floor);
    }
    let next = HsmcState {
        int_e1: (state.int_e1 + e1 * dt).clamp(-lim, lim),
        int_e2: (state.int_e2 + e2 * dt).clamp(-lim, lim),
        prev_s1: s1,
        prev_s2: s2,
        theta_hat,
        primed: true,
    };

    Ok((
        ControlBreakdown {
            u_sm0,
            u_sm1,
            u_sm2,
            u_ad,
            u_nn,
            u_total,
            sigma,
            s0,
            s1,
            s2,
        },
        next,
    ))
}
