//! PID and LQR reference controllers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::PlantParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 150.0,
            ki: 10.0,
            kd: 80.0,
            u_min: -200.0,
            u_max: 200.0,
            integral_limit: 10.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kp", self.kp),
            ("ki", self.ki),
            ("kd", self.kd),
            ("integral_limit", self.integral_limit),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.u_min < self.u_max) {
            return Err(Error::invalid("u_min", "must be below u_max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
}

/// Positional PID on `error = setpoint − measurement`. The integral is
/// clamped, the derivative is a backward difference (zero on the first call).
pub fn pid_step(gains: &PidGains, error: f64, dt: f64, state: &mut PidState) -> f64 {
    let lim = gains.integral_limit;
    state.integral = (state.integral + error * dt).clamp(-lim, lim);
    let derivative = state.prev_error.map_or(0.0, |prev| (error - prev) / dt);
    state.prev_error = Some(error);
    (gains.kp * error + gains.ki * state.integral + gains.kd * derivative)
        .clamp(gains.u_min, gains.u_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LqrWeights {
    /// Diagonal of the state cost for `[x, ẋ, w_tip, ẇ_tip]`.
    pub q: [f64; 4],
    pub r: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for LqrWeights {
    fn default() -> Self {
        Self {
            q: [100.0, 10.0, 10.0, 1.0],
            r: 0.01,
            u_min: -200.0,
            u_max: 200.0,
        }
    }
}

/// Single-input LTI model `ẋ = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl LinearModel {
    /// Two-degree-of-freedom reduction of the crane with state
    /// `[x, ẋ, w_tip, ẇ_tip]`.
    ///
    /// The payload deflection is restricted to the static tip-load shape of
    /// a cantilever, `φ(y) = (3L y² − y³) / (2L³)`, and the coupled equations
    /// are projected onto it. Drag is linearised about rest, where it
    /// vanishes.
    pub fn crane(params: &PlantParams) -> Self {
        let l = params.length;
        let phi_int = 3.0 * l / 8.0;
        let phi_sq = 33.0 * l / 140.0;
        let curv_sq = 3.0 / (l * l * l);
        let mu = params.mu();
        let m_eff = params.effective_nodal_mass();

        let mass = nalgebra::Matrix2::new(
            params.m_t + params.m_r,
            mu * phi_int,
            m_eff * phi_int,
            m_eff * phi_sq,
        );
        let inv = mass
            .try_inverse()
            .expect("reduced mass matrix is regular for positive parameters");
        let stiffness = params.ei * curv_sq;
        let damping = params.c * phi_sq;

        // generalized forces: [u, −k q − c q̇]
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 1)] = 1.0;
        a[(2, 3)] = 1.0;
        a[(1, 2)] = -inv[(0, 1)] * stiffness;
        a[(1, 3)] = -inv[(0, 1)] * damping;
        a[(3, 2)] = -inv[(1, 1)] * stiffness;
        a[(3, 3)] = -inv[(1, 1)] * damping;
        let b = DVector::from_vec(vec![0.0, inv[(0, 0)], 0.0, inv[(1, 0)]]);
        Self { a, b }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrDesign {
    pub model: LinearModel,
    pub q: DMatrix<f64>,
    pub r: f64,
    /// Riccati solution.
    pub p: DMatrix<f64>,
    /// Feedback row, `u = −K (x − x_ref)`.
    pub k: DVector<f64>,
    pub u_min: f64,
    pub u_max: f64,
}

impl LqrDesign {
    pub fn with_limits(mut self, u_min: f64, u_max: f64) -> Self {
        self.u_min = u_min;
        self.u_max = u_max;
        self
    }

    pub fn residual_norm(&self) -> f64 {
        care_residual(&self.model, &self.q, self.r, &self.p).norm()
    }

    /// Largest real part among the closed-loop eigenvalues.
    pub fn spectral_abscissa(&self) -> f64 {
        spectral_abscissa(&closed_loop(&self.model, &self.k))
    }
}

/// `AᵀP + PA − P B R⁻¹ Bᵀ P + Q`.
pub fn care_residual(model: &LinearModel, q: &DMatrix<f64>, r: f64, p: &DMatrix<f64>) -> DMatrix<f64> {
    let a = &model.a;
    let pb = p * &model.b;
    a.transpose() * p + p * a - (&pb * pb.transpose()) / r + q
}

fn closed_loop(model: &LinearModel, k: &DVector<f64>) -> DMatrix<f64> {
    &model.a - &model.b * k.transpose()
}

pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `Aᵀ X + X A = −C` through the Kronecker form.
fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let at = a.transpose();
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, c.iter().map(|v| -v));
    let sol = op.lu().solve(&rhs)?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Some((&x + x.transpose()) * 0.5)
}

/// Stabilizing Riccati solution from the matrix sign of the Hamiltonian.
fn care_sign_function(model: &LinearModel, q: &DMatrix<f64>, r: f64) -> Result<DMatrix<f64>> {
    let n = model.dim();
    let a = &model.a;
    let s = (&model.b * model.b.transpose()) / r;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let dim = (2 * n) as f64;
    let mut z = h;
    let mut converged = false;
    for _ in 0..100 {
        let inv = z.clone().try_inverse().ok_or_else(|| Error::NotStabilizable {
            reason: "Hamiltonian has eigenvalues on the imaginary axis".into(),
        })?;
        let det = z.determinant().abs();
        let scale = if det.is_finite() && det > 0.0 {
            det.powf(1.0 / dim)
        } else {
            1.0
        };
        let next = (&z / scale + inv * scale) * 0.5;
        let change = (&next - &z).norm() / next.norm();
        z = next;
        if !z.iter().all(|v| v.is_finite()) {
            break;
        }
        if change < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotStabilizable {
            reason: "sign iteration did not converge".into(),
        });
    }

    // [W12; W22 + I] P = −[W11 + I; W21]
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&z.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(z.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(z.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-z.view((n, 0), (n, n))));
    let p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::NotStabilizable {
            reason: format!("subspace solve failed: {e}"),
        })?;
    Ok((&p + p.transpose()) * 0.5)
}

/// Continuous-time LQR for a single-input model.
///
/// The stabilizing Riccati solution is obtained from the matrix sign of the
/// Hamiltonian and then refined by Newton–Kleinman steps until the residual
/// stops improving.
pub fn lqr_design(model: &LinearModel, q: &DMatrix<f64>, r: f64) -> Result<LqrDesign> {
    let n = model.dim();
    if model.a.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::invalid("q", format!("expected {n}×{n} matrices")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", format!("must be > 0, got {r}")));
    }

    let mut p = care_sign_function(model, q, r)?;
    let mut best = care_residual(model, q, r, &p).norm();
    for _ in 0..20 {
        let k = model.b.transpose() * &p / r;
        let k = k.transpose();
        let acl = closed_loop(model, &k);
        let c = q + &k * k.transpose() * r;
        let Some(candidate) = solve_lyapunov(&acl, &c) else {
            break;
        };
        let res = care_residual(model, q, r, &candidate).norm();
        if !(res < best) {
            break;
        }
        p = candidate;
        best = res;
    }

    let k = (model.b.transpose() * &p / r).transpose();
    let design = LqrDesign {
        model: model.clone(),
        q: q.clone(),
        r,
        p,
        k,
        u_min: f64::NEG_INFINITY,
        u_max: f64::INFINITY,
    };
    if !(design.spectral_abscissa() < 0.0) || !design.k.iter().all(|v| v.is_finite()) {
        return Err(Error::NotStabilizable {
            reason: "closed loop is not Hurwitz".into(),
        });
    }
    Ok(design)
}

/// `u = −K (state − reference)`, clamped to the design limits.
pub fn lqr_step(design: &LqrDesign, state: &[f64], reference: &[f64]) -> f64 {
    let u: f64 = design
        .k
        .iter()
        .zip(state.iter().zip(reference))
        .map(|(k, (s, r))| -k * (s - r))
        .sum();
    u.clamp(design.u_min, design.u_max)
}
