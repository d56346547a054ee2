//! Filter parameters, the autonomous ladder vector field and the algebra of
//! the scaled coordinates `w = D x`.
//!
//! In scaled coordinates the vector field factors as `ω₀ Q(g) z(w)`, where
//! `z` is the gradient of the log-cosh Lyapunov function and `Q` is a
//! constant matrix except for its `(4,4)` entry `-g(w₄)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix4, Vec4};
use crate::special::tanhc;

/// Cutoff `ω₀` and resonance `r` with the derived feedback base
/// `α = √2 r^¼` and scaling base `d = max(1, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct FilterParams {
    omega0: f64,
    r: f64,
    alpha: f64,
    d: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    omega0: f64,
    r: f64,
}

impl TryFrom<RawParams> for FilterParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        FilterParams::new(raw.omega0, raw.r)
    }
}

impl From<FilterParams> for RawParams {
    fn from(p: FilterParams) -> Self {
        RawParams { omega0: p.omega0, r: p.r }
    }
}

impl FilterParams {
    pub fn new(omega0: f64, r: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::Range {
                field: "omega0",
                value: omega0,
                expected: "omega0 > 0",
            });
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Range {
                field: "r",
                value: r,
                expected: "0 <= r <= 1",
            });
        }
        let alpha = alpha_of(r);
        Ok(FilterParams {
            omega0,
            r,
            alpha,
            d: alpha.max(1.0),
        })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `α⁴`, evaluated as `4r` so it is exact.
    pub fn alpha4(&self) -> f64 {
        4.0 * self.r
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `d⁴ = max(1, α⁴)`, evaluated as `max(1, 4r)` so it is exact.
    pub fn d4(&self) -> f64 {
        self.alpha4().max(1.0)
    }

    /// True on the zero-feedback branch `r = 0`.
    pub fn is_feedback_free(&self) -> bool {
        self.r == 0.0
    }
}

/// `α = √2 r^¼`, valid for any `r ≥ 0` (used by threshold searches that step
/// slightly outside the physical range).
///
/// Evaluated as `(4r)^¼`, which is exactly 1 at `r = 1/4`.
pub fn alpha_of(r: f64) -> f64 {
    (4.0 * r).sqrt().sqrt()
}

/// Nondimensional capacitor voltages `x₁..x₄`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State(pub Vec4);

/// Scaled state `w = D x`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScaledState(pub Vec4);

impl State {
    /// Checked constructor; rejects non-finite entries.
    pub fn new(x: Vec4) -> Result<Self> {
        if x.iter().all(|v| v.is_finite()) {
            Ok(State(x))
        } else {
            Err(Error::Invalid(format!("state has non-finite entries: {x:?}")))
        }
    }

    pub fn zero() -> Self {
        State([0.0; 4])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl ScaledState {
    pub fn new(w: Vec4) -> Result<Self> {
        if w.iter().all(|v| v.is_finite()) {
            Ok(ScaledState(w))
        } else {
            Err(Error::Invalid(format!("scaled state has non-finite entries: {w:?}")))
        }
    }

    pub fn zero() -> Self {
        ScaledState([0.0; 4])
    }
}

/// Nonlinear vector field of the unforced ladder.
pub fn rhs_nonlinear(x: &State, p: &FilterParams) -> Vec4 {
    let t = x.0.map(f64::tanh);
    let feedback = (p.alpha4() * x.0[3]).tanh();
    let w0 = p.omega0;
    [
        w0 * (-t[0] - feedback),
        w0 * (-t[1] + t[0]),
        w0 * (-t[2] + t[1]),
        w0 * (-t[3] + t[2]),
    ]
}

/// Jacobian of [`rhs_nonlinear`] at the origin.
pub fn matrix_a(p: &FilterParams) -> Matrix4 {
    Matrix4::from_rows([
        [-1.0, 0.0, 0.0, -p.alpha4()],
        [1.0, -1.0, 0.0, 0.0],
        [0.0, 1.0, -1.0, 0.0],
        [0.0, 0.0, 1.0, -1.0],
    ])
    .scale(p.omega0)
}

/// Linear system matrix in the coordinates `w = diag(1, α, α², α³) x`.
pub fn matrix_b(p: &FilterParams) -> Matrix4 {
    let a = p.alpha;
    Matrix4::from_rows([
        [-1.0, 0.0, 0.0, -a],
        [a, -1.0, 0.0, 0.0],
        [0.0, a, -1.0, 0.0],
        [0.0, 0.0, a, -1.0],
    ])
    .scale(p.omega0)
}

fn check_scaling(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::Range {
            field: "d",
            value: d,
            expected: "d > 0",
        })
    }
}

fn scaling_powers(d: f64) -> Vec4 {
    [1.0, d, d * d, d * d * d]
}

/// `D = diag(1, d, d², d³)`.
pub fn matrix_d(d: f64) -> Result<Matrix4> {
    check_scaling(d)?;
    Ok(Matrix4::diag(scaling_powers(d)))
}

pub fn to_scaled(x: &State, d: f64) -> Result<ScaledState> {
    check_scaling(d)?;
    let s = scaling_powers(d);
    Ok(ScaledState([x.0[0] * s[0], x.0[1] * s[1], x.0[2] * s[2], x.0[3] * s[3]]))
}

pub fn from_scaled(w: &ScaledState, d: f64) -> Result<State> {
    check_scaling(d)?;
    let s = scaling_powers(d);
    Ok(State([w.0[0] / s[0], w.0[1] / s[1], w.0[2] / s[2], w.0[3] / s[3]]))
}

/// Vector field in scaled coordinates, written out term by term.
pub fn scaled_rhs(w: &ScaledState, p: &FilterParams) -> Vec4 {
    let d = p.d;
    let (d2, d3) = (d * d, d * d * d);
    let w = &w.0;
    let t1 = w[0].tanh();
    let t2 = (w[1] / d).tanh();
    let t3 = (w[2] / d2).tanh();
    let t4 = (w[3] / d3).tanh();
    let feedback = (p.alpha4() * w[3] / d3).tanh();
    let w0 = p.omega0;
    [
        w0 * (-t1 - feedback),
        w0 * (d * t1 - d * t2),
        w0 * (d2 * t2 - d2 * t3),
        w0 * (d3 * t3 - d3 * t4),
    ]
}

/// `z(w)`, the gradient of the log-cosh Lyapunov function.
///
/// On the zero-feedback branch the fourth entry is identically zero.
pub fn z_vector(w: &ScaledState, p: &FilterParams) -> Vec4 {
    let d = p.d;
    let (d2, d3) = (d * d, d * d * d);
    let w = &w.0;
    [
        w[0].tanh(),
        d * (w[1] / d).tanh(),
        d2 * (w[2] / d2).tanh(),
        (p.alpha4() * w[3] / d3).tanh() / d,
    ]
}

/// `g(w₄) = d⁴ tanh(w₄/d³) / tanh(α⁴ w₄/d³)`.
///
/// Evaluated as `(d⁴/α⁴)·tanhc(w₄/d³)/tanhc(α⁴w₄/d³)`, which removes the
/// `0/0` at `w₄ = 0` and keeps full precision for small arguments. The
/// result is clamped to the closed interval spanned by `d⁴` and `d⁴/α⁴`.
pub fn g_of_w4(w4: f64, p: &FilterParams) -> Result<f64> {
    if p.is_feedback_free() {
        return Err(Error::Domain(
            "g(w4) is undefined for alpha = 0 (r = 0); use the zero-feedback branch".into(),
        ));
    }
    let d = p.d;
    let d3 = d * d * d;
    let d4 = p.d4();
    let alpha4 = p.alpha4();
    let b = w4 / d3;
    let a = alpha4 * b;
    let g = (d4 / alpha4) * tanhc(b) / tanhc(a);
    let (lo, hi) = g_bounds(p);
    Ok(g.clamp(lo, hi))
}

/// Closed interval `[min(d⁴, d⁴/α⁴), max(d⁴, d⁴/α⁴)]` containing `g`.
pub fn g_bounds(p: &FilterParams) -> (f64, f64) {
    let d4 = p.d4();
    let other = d4 / p.alpha4();
    (d4.min(other), d4.max(other))
}

/// `Q(g)`: the constant coupling matrix of the scaled system with `-g` in
/// the bottom-right corner.
pub fn matrix_q(p: &FilterParams, g: f64) -> Matrix4 {
    let d = p.d;
    Matrix4::from_rows([
        [-1.0, 0.0, 0.0, -d],
        [d, -1.0, 0.0, 0.0],
        [0.0, d, -1.0, 0.0],
        [0.0, 0.0, d, -g],
    ])
}

/// `f = (2/d)(1 - g)`.
pub fn f_scalar(g: f64, d: f64) -> f64 {
    (2.0 / d) * (1.0 - g)
}

/// `G(f)`, with `Q_s = -I + (d/2) G(f)`.
pub fn matrix_g(f: f64) -> Matrix4 {
    Matrix4::from_rows([
        [0.0, 1.0, 0.0, -1.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [-1.0, 0.0, 1.0, f],
    ])
}
