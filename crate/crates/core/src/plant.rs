//! Trolley and flexible-payload dynamics under Morison hydrodynamic loading.
//!
//! The payload is an Euler–Bernoulli beam hanging from the trolley, clamped at
//! the attachment (node 0) and free at the tip (node `n_nodes - 1`). The beam
//! is sampled on a uniform grid; the fourth spatial derivative uses a central
//! five-point stencil with ghost-node closures for both ends, and integrals
//! along the payload use the trapezoidal rule.
//!
//! Sign conventions: `w` is the deflection relative to the trolley, the
//! external disturbance field is an applied load acting along `+w`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and discretisation parameters of the crane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// Trolley mass (kg).
    pub m_t: f64,
    /// Payload mass (kg).
    pub m_r: f64,
    /// Payload length (m).
    #[serde(rename = "L")]
    pub length: f64,
    /// Payload diameter (m).
    #[serde(rename = "d")]
    pub diameter: f64,
    /// Flexural rigidity (N·m²).
    #[serde(rename = "EI")]
    pub ei: f64,
    /// Viscous damping per unit length (N·s/m²).
    pub c: f64,
    /// Water density (kg/m³).
    pub rho_w: f64,
    /// Added-mass coefficient.
    #[serde(rename = "C_a")]
    pub c_a: f64,
    /// Drag coefficient.
    #[serde(rename = "C_d")]
    pub c_d: f64,
    /// Number of grid points along the payload, root included.
    pub n_nodes: usize,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            m_t: 100.0,
            m_r: 50.0,
            length: 10.0,
            diameter: 0.5,
            ei: 1.0e4,
            c: 10.0,
            rho_w: 1025.0,
            c_a: 0.8,
            c_d: 0.8,
            n_nodes: 21,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m_t", self.m_t),
            ("m_r", self.m_r),
            ("L", self.length),
            ("d", self.diameter),
            ("EI", self.ei),
            ("rho_w", self.rho_w),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::invalid("c", format!("must be finite and >= 0, got {}", self.c)));
        }
        for (name, v) in [("C_a", self.c_a), ("C_d", self.c_d)] {
            if !(0.0..=2.0).contains(&v) {
                return Err(Error::invalid(name, format!("must lie in [0, 2], got {v}")));
            }
        }
        if self.n_nodes < 5 {
            return Err(Error::invalid(
                "n_nodes",
                format!("need at least 5 grid points, got {}", self.n_nodes),
            ));
        }
        Ok(())
    }

    /// Linear mass density of the payload, `m_r / L` (kg/m).
    pub fn mu(&self) -> f64 {
        self.m_r / self.length
    }

    pub fn dy(&self) -> f64 {
        self.length / (self.n_nodes - 1) as f64
    }

    /// Morison added mass per unit length, `π/4 ρ_w C_a d²` (kg/m).
    pub fn added_mass(&self) -> f64 {
        0.25 * PI * self.rho_w * self.c_a * self.diameter * self.diameter
    }

    /// Mass per unit length seen by the beam acceleration once the added-mass
    /// part of the inertial load is moved to the left-hand side.
    pub fn effective_nodal_mass(&self) -> f64 {
        self.mu() + self.added_mass()
    }

    /// Trapezoidal quadrature weights over all `n_nodes` grid points.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let dy = self.dy();
        let n = self.n_nodes;
        (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * dy } else { dy })
            .collect()
    }

    /// Spreads a scalar force (N) uniformly along the payload (N/m per node).
    pub fn uniform_load(&self, force: f64) -> Vec<f64> {
        vec![force / self.length; self.n_nodes]
    }
}

/// Inertial Morison load per unit length for a relative acceleration.
pub fn morison_inertial(params: &PlantParams, a_rel: f64) -> f64 {
    params.added_mass() * a_rel
}

/// Quadratic Morison drag per unit length for a relative velocity.
pub fn morison_drag(params: &PlantParams, v_rel: f64) -> f64 {
    0.5 * params.rho_w * params.c_d * params.diameter * v_rel * v_rel.abs()
}

/// Hydrodynamic load at one grid point, split into its three contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroForceBreakdown {
    pub f_m: f64,
    pub f_d: f64,
    pub delta_f: f64,
}

impl HydroForceBreakdown {
    pub fn total(&self) -> f64 {
        self.f_m + self.f_d + self.delta_f
    }
}

/// Evaluates the hydrodynamic load at one node. `applied` is the external
/// disturbance (along `+w`); it enters the resistive load with opposite sign.
pub fn hydro_force(
    params: &PlantParams,
    x_ddot: f64,
    w_ddot: f64,
    x_dot: f64,
    w_dot: f64,
    applied: f64,
) -> HydroForceBreakdown {
    HydroForceBreakdown {
        f_m: morison_inertial(params, x_ddot + w_ddot),
        f_d: morison_drag(params, x_dot + w_dot),
        delta_f: -applied,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub x: f64,
    pub x_dot: f64,
    pub w: Vec<f64>,
    pub w_dot: Vec<f64>,
    pub t: f64,
}

impl PlantState {
    pub fn at_rest(params: &PlantParams) -> Self {
        Self {
            x: 0.0,
            x_dot: 0.0,
            w: vec![0.0; params.n_nodes],
            w_dot: vec![0.0; params.n_nodes],
            t: 0.0,
        }
    }

    pub fn w_tip(&self) -> f64 {
        *self.w.last().unwrap_or(&0.0)
    }

    pub fn w_dot_tip(&self) -> f64 {
        *self.w_dot.last().unwrap_or(&0.0)
    }

    /// One-sided second-order estimate of ∂w/∂y at the tip.
    pub fn w_slope_tip(&self, dy: f64) -> f64 {
        let n = self.w.len();
        if n < 3 {
            return 0.0;
        }
        (3.0 * self.w[n - 1] - 4.0 * self.w[n - 2] + self.w[n - 3]) / (2.0 * dy)
    }

    /// Largest absolute value over all state components, with its name.
    pub(crate) fn max_magnitude(&self) -> (&'static str, f64) {
        let mut worst = ("x", self.x.abs());
        let mut consider = |name: &'static str, v: f64| {
            let a = if v.is_finite() { v.abs() } else { f64::INFINITY };
            if a > worst.1 || (a.is_infinite() && worst.1.is_finite()) {
                worst = (name, a);
            }
        };
        consider("x_dot", self.x_dot);
        for &v in &self.w {
            consider("w", v);
        }
        for &v in &self.w_dot {
            consider("w_dot", v);
        }
        worst
    }
}

/// Time derivative of a [`PlantState`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlantDerivative {
    pub x_dot: f64,
    pub x_ddot: f64,
    pub w_dot: Vec<f64>,
    pub w_ddot: Vec<f64>,
}

/// Discrete `∂⁴w/∂y⁴` for a payload clamped at node 0 and free at the last node.
///
/// Node 0 is constrained, so its row is reported as zero.
pub fn beam_fourth_derivative(w: &[f64], dy: f64) -> Result<Vec<f64>> {
    let n = w.len();
    if n < 5 {
        return Err(Error::FieldTooShort { len: n });
    }
    let inv = 1.0 / (dy * dy * dy * dy);
    let mut out = vec![0.0; n];
    // ghost w[-1] = w[1] (zero slope at the root)
    out[1] = (7.0 * w[1] - 4.0 * w[0] - 4.0 * w[2] + w[3]) * inv;
    for i in 2..n - 2 {
        out[i] = (w[i - 2] - 4.0 * w[i - 1] + 6.0 * w[i] - 4.0 * w[i + 1] + w[i + 2]) * inv;
    }
    // ghosts from w'' = 0 and w''' = 0 at the tip
    let t = n - 1;
    out[t - 1] = (w[t - 3] - 4.0 * w[t - 2] + 5.0 * w[t - 1] - 2.0 * w[t]) * inv;
    out[t] = (2.0 * w[t - 2] - 4.0 * w[t - 1] + 2.0 * w[t]) * inv;
    Ok(out)
}

/// Discrete curvature `w''` on the grid with the same ghost-node closures
/// (the free tip carries zero curvature).
pub fn beam_curvature(w: &[f64], dy: f64) -> Vec<f64> {
    let n = w.len();
    let inv = 1.0 / (dy * dy);
    let mut k = vec![0.0; n];
    if n < 3 {
        return k;
    }
    k[0] = 2.0 * (w[1] - w[0]) * inv;
    for i in 1..n - 1 {
        k[i] = (w[i - 1] - 2.0 * w[i] + w[i + 1]) * inv;
    }
    k
}

/// Solves the coupled trolley/beam equations for the accelerations.
///
/// The unknowns are `ẍ` and `ẅ` at nodes `1..n`. Every beam row reads
/// `(μ + m_a)(ẍ + ẅ_j) = r_j`, so the mass matrix is an arrow matrix whose
/// beam block is diagonal; eliminating `ẅ` leaves a scalar pivot
/// `m_t + μ·q_0` for the trolley row, which is solved exactly.
pub fn plant_derivatives(
    state: &PlantState,
    params: &PlantParams,
    u: f64,
    delta_f: &[f64],
) -> Result<PlantDerivative> {
    let n = params.n_nodes;
    if state.w.len() != n || state.w_dot.len() != n {
        return Err(Error::invalid(
            "state",
            format!(
                "field lengths {}/{} differ from n_nodes = {n}",
                state.w.len(),
                state.w_dot.len()
            ),
        ));
    }
    if delta_f.len() != n {
        return Err(Error::invalid(
            "delta_f",
            format!("expected {n} entries, got {}", delta_f.len()),
        ));
    }
    let dy = params.dy();
    let d4 = beam_fourth_derivative(&state.w, dy)?;
    let q = params.quadrature_weights();
    let mu = params.mu();
    let m_eff = params.effective_nodal_mass();
    let total_mass = params.m_t + params.m_r;

    let mut rhs = vec![0.0; n];
    let mut weighted_rhs = 0.0;
    let mut free_length = 0.0;
    for j in 1..n {
        let drag = morison_drag(params, state.x_dot + state.w_dot[j]);
        rhs[j] = delta_f[j] - params.ei * d4[j] - params.c * state.w_dot[j] - drag;
        weighted_rhs += q[j] * rhs[j];
        free_length += q[j];
    }

    let pivot = total_mass - mu * free_length;
    if !(pivot.is_finite() && pivot > 1e-12 * total_mass) {
        return Err(Error::SingularMassMatrix { pivot });
    }
    let x_ddot = (u - mu / m_eff * weighted_rhs) / pivot;

    let mut w_ddot = vec![0.0; n];
    for j in 1..n {
        w_ddot[j] = rhs[j] / m_eff - x_ddot;
    }
    let mut w_dot = state.w_dot.clone();
    w_dot[0] = 0.0;

    Ok(PlantDerivative {
        x_dot: state.x_dot,
        x_ddot,
        w_dot,
        w_ddot,
    })
}

/// Bending strain energy `½ EI ∫ (w'')² dy` on the grid.
pub fn strain_energy(params: &PlantParams, w: &[f64]) -> f64 {
    let k = beam_curvature(w, params.dy());
    let q = params.quadrature_weights();
    0.5 * params.ei * k.iter().zip(&q).map(|(k, q)| q * k * k).sum::<f64>()
}

/// Mechanical energy that the undamped, unforced coupled model conserves.
///
/// The beam contributes its absolute-velocity kinetic energy (structural plus
/// added mass) and its bending energy. The trolley equation does not feel the
/// fluid reaction, so its kinetic term carries the factor `(μ + m_a)/μ` on the
/// trolley mass plus the root half-cell; with this weighting the power balance
/// closes exactly: `dE/dt = (μ + m_a)/μ · u ẋ − Σ q_j (c ẇ_j + f_d,j − Δf_j) ẇ_j`.
pub fn mechanical_energy(params: &PlantParams, state: &PlantState) -> f64 {
    let q = params.quadrature_weights();
    let mu = params.mu();
    let m_eff = params.effective_nodal_mass();
    let trolley_mass = (params.m_t + mu * q[0]) * m_eff / mu;
    let beam_kinetic: f64 = (1..params.n_nodes)
        .map(|j| {
            let v = state.x_dot + state.w_dot[j];
            q[j] * v * v
        })
        .sum();
    0.5 * trolley_mass * state.x_dot * state.x_dot
        + 0.5 * m_eff * beam_kinetic
        + strain_energy(params, &state.w)
}
