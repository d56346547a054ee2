//! Time integration of the unforced ladder.
//!
//! Two schemes are available. [`step_rk4`] is the classic explicit
//! fourth-order method. [`step_discrete_gradient`] is implicit and works in
//! scaled coordinates: it replaces the gradient `z` of the log-cosh Lyapunov
//! function by its coordinate-wise divided difference `z̄` between the old
//! and new state, so that
//!
//! ```text
//! V(w') - V(w) = z̄ᵀ (w' - w) = h ω₀ z̄ᵀ Q̄_s z̄ ≤ 0
//! ```
//!
//! holds for every step size, up to the Newton residual.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::LogCoshLyapunov;
use crate::matrix::{norm_inf, Matrix4, Vec4};
use crate::model::{from_scaled, g_of_w4, rhs_nonlinear, FilterParams, ScaledState, State};
use crate::special::{ln_cosh_divided_difference, ln_cosh_divided_difference_db};

/// Number of times [`simulate`] may halve a failing discrete-gradient step.
pub const MAX_STEP_HALVINGS: u32 = 10;
const MAX_DAMPING_HALVINGS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "rk4")]
    ExplicitRk4,
    #[serde(rename = "dg")]
    DiscreteGradient,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ExplicitRk4 => "rk4",
            Method::DiscreteGradient => "dg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rk4" | "explicitrk4" => Ok(Method::ExplicitRk4),
            "dg" | "discretegradient" | "discrete-gradient" => Ok(Method::DiscreteGradient),
            other => Err(Error::Invalid(format!("unknown method '{other}' (expected rk4 or dg)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub method: Method,
    pub newton_tol: f64,
    pub newton_max_iter: u32,
}

impl StepConfig {
    pub const DEFAULT_NEWTON_TOL: f64 = 1e-12;
    pub const DEFAULT_NEWTON_MAX_ITER: u32 = 50;

    pub fn new(dt: f64, method: Method) -> Result<Self> {
        let cfg = StepConfig {
            dt,
            method,
            newton_tol: Self::DEFAULT_NEWTON_TOL,
            newton_max_iter: Self::DEFAULT_NEWTON_MAX_ITER,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_newton(mut self, tol: f64, max_iter: u32) -> Result<Self> {
        self.newton_tol = tol;
        self.newton_max_iter = max_iter;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Range {
                field: "dt",
                value: self.dt,
                expected: "dt > 0",
            });
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return Err(Error::Range {
                field: "newton_tol",
                value: self.newton_tol,
                expected: "newton_tol > 0",
            });
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Range {
                field: "newton_max_iter",
                value: 0.0,
                expected: "newton_max_iter >= 1",
            });
        }
        Ok(())
    }
}

/// Sampled solution with the log-cosh Lyapunov function and its time
/// derivative along the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub v: Vec<f64>,
    pub vdot: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `V[n] - V[n-1]` for every step.
    pub fn v_increments(&self) -> Vec<f64> {
        self.v.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Largest per-step increase of `V` (negative when `V` strictly decays).
    /// NaN if any increment is NaN, e.g. after an explicit step blew up.
    pub fn max_v_increase(&self) -> f64 {
        self.v_increments()
            .into_iter()
            .fold(f64::NEG_INFINITY, |acc, dv| if acc.is_nan() || dv.is_nan() { f64::NAN } else { acc.max(dv) })
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory has at least one sample")
    }
}

/// One classic fourth-order Runge–Kutta step of the nonlinear system.
pub fn step_rk4(x: &State, p: &FilterParams, dt: f64) -> State {
    let f = |s: &Vec4| rhs_nonlinear(&State(*s), p);
    let axpy = |a: &Vec4, k: f64, b: &Vec4| [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2], a[3] + k * b[3]];
    let k1 = f(&x.0);
    let k2 = f(&axpy(&x.0, 0.5 * dt, &k1));
    let k3 = f(&axpy(&x.0, 0.5 * dt, &k2));
    let k4 = f(&axpy(&x.0, dt, &k3));
    let mut out = x.0;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    State(out)
}

/// `cᵢ kᵢ · dd(kᵢ a, kᵢ b)`: divided difference of `cᵢ ln cosh(kᵢ s)`.
fn component_dg(c: f64, k: f64, a: f64, b: f64) -> f64 {
    c * k * ln_cosh_divided_difference(k * a, k * b)
}

fn component_dg_db(c: f64, k: f64, a: f64, b: f64) -> f64 {
    c * k * k * ln_cosh_divided_difference_db(k * a, k * b)
}

/// The scaled system split into the pieces the discrete gradient needs.
#[derive(Debug, Clone, Copy)]
struct DiscreteSystem {
    energy: LogCoshLyapunov,
    omega0: f64,
    d: f64,
    feedback: f64,
    /// `d³ tanh(w₄/d³)` is the derivative of `tail_c ln cosh(tail_k s)`.
    tail_c: f64,
    tail_k: f64,
}

impl DiscreteSystem {
    fn new(p: &FilterParams) -> Self {
        let d = p.d();
        let d3 = d * d * d;
        DiscreteSystem {
            energy: LogCoshLyapunov::new(p),
            omega0: p.omega0(),
            d,
            feedback: if p.is_feedback_free() { 0.0 } else { d },
            tail_c: d3 * d3,
            tail_k: 1.0 / d3,
        }
    }

    fn zbar(&self, w: &Vec4, wn: &Vec4) -> Vec4 {
        let mut z = [0.0; 4];
        for (i, zi) in z.iter_mut().enumerate() {
            let (c, k) = self.energy.component(i);
            *zi = component_dg(c, k, w[i], wn[i]);
        }
        z
    }

    fn tail(&self, w4: f64, wn4: f64) -> f64 {
        component_dg(self.tail_c, self.tail_k, w4, wn4)
    }

    /// `ω₀ Q̄ z̄` with the fourth row written through the discrete tail.
    fn field(&self, w: &Vec4, wn: &Vec4) -> Vec4 {
        let z = self.zbar(w, wn);
        let t = self.tail(w[3], wn[3]);
        let (d, w0) = (self.d, self.omega0);
        [
            w0 * (-z[0] - self.feedback * z[3]),
            w0 * (d * z[0] - z[1]),
            w0 * (d * z[1] - z[2]),
            w0 * (d * z[2] - t),
        ]
    }

    fn residual(&self, w: &Vec4, wn: &Vec4, h: f64) -> Vec4 {
        let f = self.field(w, wn);
        [
            wn[0] - w[0] - h * f[0],
            wn[1] - w[1] - h * f[1],
            wn[2] - w[2] - h * f[2],
            wn[3] - w[3] - h * f[3],
        ]
    }

    fn jacobian(&self, w: &Vec4, wn: &Vec4, h: f64) -> Matrix4 {
        let mut s = [0.0; 4];
        for (i, si) in s.iter_mut().enumerate() {
            let (c, k) = self.energy.component(i);
            *si = component_dg_db(c, k, w[i], wn[i]);
        }
        let st = component_dg_db(self.tail_c, self.tail_k, w[3], wn[3]);
        let (d, k) = (self.d, h * self.omega0);
        Matrix4::from_rows([
            [1.0 + k * s[0], 0.0, 0.0, k * self.feedback * s[3]],
            [-k * d * s[0], 1.0 + k * s[1], 0.0, 0.0],
            [0.0, -k * d * s[1], 1.0 + k * s[2], 0.0],
            [0.0, 0.0, -k * d * s[2], 1.0 + k * st],
        ])
    }

    fn solve(&self, w: &Vec4, h: f64, tol: f64, max_iter: u32) -> Result<Vec4> {
        if *w == [0.0; 4] {
            return Ok(*w);
        }
        // explicit Euler predictor, unless staying put is already closer
        let euler = {
            let f = self.energy.field(&ScaledState(*w));
            [w[0] + h * f[0], w[1] + h * f[1], w[2] + h * f[2], w[3] + h * f[3]]
        };
        let r_euler = self.residual(w, &euler, h);
        let r_stay = self.residual(w, w, h);
        let (mut wn, mut r) = if norm_inf(&r_euler) <= norm_inf(&r_stay) {
            (euler, r_euler)
        } else {
            (*w, r_stay)
        };
        let mut rn = norm_inf(&r);

        for _ in 0..max_iter {
            if rn <= tol {
                return Ok(wn);
            }
            let jac = self.jacobian(w, &wn, h);
            let Some(delta) = jac.solve(&r.map(|v| -v)) else {
                break;
            };
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..=MAX_DAMPING_HALVINGS {
                let cand = [
                    wn[0] + lambda * delta[0],
                    wn[1] + lambda * delta[1],
                    wn[2] + lambda * delta[2],
                    wn[3] + lambda * delta[3],
                ];
                let rc = self.residual(w, &cand, h);
                let rcn = norm_inf(&rc);
                if rcn < rn {
                    wn = cand;
                    r = rc;
                    rn = rcn;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if rn <= tol {
            Ok(wn)
        } else {
            Err(Error::NewtonFailed {
                iterations: max_iter as usize,
                residual: rn,
            })
        }
    }
}

/// Coordinate-wise discrete gradient `z̄` of the log-cosh Lyapunov function
/// between `w` and `w_next`; `V(w_next) - V(w) = z̄ᵀ(w_next - w)`.
pub fn discrete_gradient(p: &FilterParams, w: &ScaledState, w_next: &ScaledState) -> Vec4 {
    DiscreteSystem::new(p).zbar(&w.0, &w_next.0)
}

/// Discrete counterpart `ḡ` of `g(w₄)`, i.e. the ratio of the divided
/// differences of `d⁶ ln cosh(s/d³)` and of the fourth log-cosh term.
/// Reduces to `g(w₄)` when both points coincide.
pub fn discrete_g(p: &FilterParams, w4: f64, w4_next: f64) -> Result<f64> {
    if p.is_feedback_free() {
        return Err(Error::Domain("discrete g is undefined for r = 0".into()));
    }
    let sys = DiscreteSystem::new(p);
    let (c, k) = sys.energy.component(3);
    let z4 = component_dg(c, k, w4, w4_next);
    if z4 == 0.0 {
        // symmetric crossing; both divided differences vanish and the ratio
        // tends to g at the common magnitude
        return g_of_w4(w4_next, p);
    }
    Ok(sys.tail(w4, w4_next) / z4)
}

/// One discrete-gradient step of size `h` in scaled coordinates.
pub fn step_discrete_gradient_scaled(
    w: &ScaledState,
    p: &FilterParams,
    h: f64,
    cfg: &StepConfig,
) -> Result<ScaledState> {
    let sys = DiscreteSystem::new(p);
    sys.solve(&w.0, h, cfg.newton_tol, cfg.newton_max_iter)
        .map(ScaledState)
}

/// One discrete-gradient step of size `cfg.dt`.
pub fn step_discrete_gradient(x: &State, p: &FilterParams, cfg: &StepConfig) -> Result<State> {
    cfg.validate()?;
    let energy = LogCoshLyapunov::new(p);
    let w = energy.scale(x);
    let wn = step_discrete_gradient_scaled(&w, p, cfg.dt, cfg)?;
    from_scaled(&wn, p.d())
}

fn advance_dg(sys: &DiscreteSystem, w: &Vec4, h: f64, cfg: &StepConfig, halvings: u32) -> Result<Vec4> {
    match sys.solve(w, h, cfg.newton_tol, cfg.newton_max_iter) {
        Ok(wn) => Ok(wn),
        Err(_) if halvings < MAX_STEP_HALVINGS => {
            let mid = advance_dg(sys, w, 0.5 * h, cfg, halvings + 1)?;
            advance_dg(sys, &mid, 0.5 * h, cfg, halvings + 1)
        }
        Err(e) => Err(e),
    }
}

/// Integrates `n_steps` steps from `x0` and records `t`, `x`, `V` and `V̇`
/// at every step. Discrete-gradient steps that fail to converge are split
/// in halves, up to [`MAX_STEP_HALVINGS`] levels deep.
pub fn simulate(x0: &State, p: &FilterParams, cfg: &StepConfig, n_steps: usize) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::Invalid("n_steps must be at least 1".into()));
    }
    cfg.validate()?;
    if !x0.is_finite() {
        return Err(Error::Invalid("initial state must be finite".into()));
    }
    let sys = DiscreteSystem::new(p);
    let energy = sys.energy;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        v: Vec::with_capacity(n_steps + 1),
        vdot: Vec::with_capacity(n_steps + 1),
    };
    let mut record = |t: f64, x: State, w: &ScaledState| {
        traj.times.push(t);
        traj.states.push(x);
        traj.v.push(energy.value(w));
        traj.vdot.push(energy.derivative(w));
    };

    let mut w = energy.scale(x0);
    let mut x = *x0;
    record(0.0, x, &w);
    for step in 1..=n_steps {
        match cfg.method {
            Method::ExplicitRk4 => {
                x = step_rk4(&x, p, cfg.dt);
                w = energy.scale(&x);
            }
            Method::DiscreteGradient => {
                w = ScaledState(advance_dg(&sys, &w.0, cfg.dt, cfg, 0).map_err(|e| {
                    Error::StepFailed {
                        step,
                        source: Box::new(e),
                    }
                })?);
                x = from_scaled(&w, p.d())?;
            }
        }
        record(step as f64 * cfg.dt, x, &w);
    }
    Ok(traj)
}
