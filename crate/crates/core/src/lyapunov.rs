//! Lyapunov candidates for the ladder and negative-definiteness
//! certificates for the matrices governing their time derivatives.
//!
//! Three candidates are provided:
//!
//! - `½ xᵀx`, whose derivative is governed by `A_s`;
//! - `½ wᵀw` with `w = diag(1, α, α², α³) x`, governed by `B_s`;
//! - the separable log-cosh function of the scaled state, whose gradient is
//!   `z(w)` and whose derivative is `ω₀ zᵀ Q_s(g) z`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi;
use crate::matrix::{dot, Matrix4, Vec4};
use crate::model::{
    alpha_of, f_scalar, g_of_w4, matrix_a, matrix_b, matrix_g, matrix_q, to_scaled,
    z_vector, FilterParams, ScaledState, State,
};
use crate::special::ln_cosh;

pub use crate::jacobi::sym_eigvals;

/// Default eigenvalue tolerance for definiteness verdicts, applied to the
/// `ω₀`-normalised matrix.
pub const DEFAULT_VERDICT_TOL: f64 = 1e-10;

/// `½‖x‖²`.
pub fn v_quadratic_x(x: &State) -> f64 {
    0.5 * dot(&x.0, &x.0)
}

/// `½‖w‖²`.
pub fn v_quadratic_w(w: &ScaledState) -> f64 {
    0.5 * dot(&w.0, &w.0)
}

fn require_feedback(p: &FilterParams) -> Result<()> {
    if p.is_feedback_free() {
        Err(Error::Domain(
            "the log-cosh Lyapunov function needs r > 0; use the zero-feedback branch for r = 0"
                .into(),
        ))
    } else {
        Ok(())
    }
}

/// Log-cosh Lyapunov function of the scaled state:
///
/// `ln cosh w₁ + d² ln cosh(w₂/d) + d⁴ ln cosh(w₃/d²) + (d²/α⁴) ln cosh(α⁴w₄/d³)`.
pub fn v_nonlinear(w: &ScaledState, p: &FilterParams) -> Result<f64> {
    require_feedback(p)?;
    Ok(LogCoshLyapunov::new(p).value(w))
}

/// `V₀(x) = Σ ln cosh xᵢ`, the Lyapunov function used when `r = 0`.
pub fn v_zero_feedback(x: &State) -> f64 {
    x.0.iter().map(|&v| ln_cosh(v)).sum()
}

/// Gradient of [`v_nonlinear`]; identical to [`z_vector`].
pub fn grad_v(w: &ScaledState, p: &FilterParams) -> Result<Vec4> {
    require_feedback(p)?;
    Ok(z_vector(w, p))
}

/// `V̇ = ω₀ zᵀ Q_s(g(w₄)) z`.
pub fn vdot_nonlinear(w: &ScaledState, p: &FilterParams) -> Result<f64> {
    require_feedback(p)?;
    let z = z_vector(w, p);
    let g = g_of_w4(w.0[3], p)?;
    let qs = matrix_q(p, g).symmetrize();
    Ok(p.omega0() * qs.quadratic_form(&z))
}

/// Largest eigenvalue of `G(f)`: `max(√2, ½(f + √(f² + 8)))`.
pub fn lambda_g_max(f: f64) -> f64 {
    std::f64::consts::SQRT_2.max(0.5 * (f + (f * f + 8.0).sqrt()))
}

/// The separable log-cosh Lyapunov function for a fixed parameter point.
///
/// Each coordinate contributes `cᵢ ln cosh(kᵢ wᵢ)`. On the zero-feedback
/// branch all weights are one and `d = 1`, giving [`v_zero_feedback`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCoshLyapunov {
    params: FilterParams,
    weight: Vec4,
    rate: Vec4,
}

impl LogCoshLyapunov {
    pub fn new(p: &FilterParams) -> Self {
        let d = p.d();
        let (d2, d3) = (d * d, d * d * d);
        let (weight, rate) = if p.is_feedback_free() {
            ([1.0; 4], [1.0; 4])
        } else {
            let a4 = p.alpha4();
            ([1.0, d2, d2 * d2, d2 / a4], [1.0, 1.0 / d, 1.0 / d2, a4 / d3])
        };
        LogCoshLyapunov { params: *p, weight, rate }
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    /// `(cᵢ, kᵢ)` of coordinate `i`.
    pub fn component(&self, i: usize) -> (f64, f64) {
        (self.weight[i], self.rate[i])
    }

    pub fn component_value(&self, i: usize, s: f64) -> f64 {
        self.weight[i] * ln_cosh(self.rate[i] * s)
    }

    pub fn value(&self, w: &ScaledState) -> f64 {
        (0..4).map(|i| self.component_value(i, w.0[i])).sum()
    }

    pub fn value_at_state(&self, x: &State) -> f64 {
        self.value(&self.scale(x))
    }

    pub fn gradient(&self, w: &ScaledState) -> Vec4 {
        if self.params.is_feedback_free() {
            w.0.map(f64::tanh)
        } else {
            z_vector(w, &self.params)
        }
    }

    /// Scaled vector field `ω₀ [−z₁ − φ z₄; d z₁ − z₂; d z₂ − z₃; d z₃ − d³ tanh(w₄/d³)]`,
    /// where `φ = d` with feedback and `0` without.
    pub fn field(&self, w: &ScaledState) -> Vec4 {
        let z = self.gradient(w);
        let d = self.params.d();
        let d3 = d * d * d;
        let feedback = if self.params.is_feedback_free() { 0.0 } else { d };
        let w0 = self.params.omega0();
        [
            w0 * (-z[0] - feedback * z[3]),
            w0 * (d * z[0] - z[1]),
            w0 * (d * z[1] - z[2]),
            w0 * (d * z[2] - d3 * (w.0[3] / d3).tanh()),
        ]
    }

    /// `∇V · ẇ` along the flow.
    pub fn derivative(&self, w: &ScaledState) -> f64 {
        dot(&self.gradient(w), &self.field(w))
    }

    pub fn derivative_at_state(&self, x: &State) -> f64 {
        self.derivative(&self.scale(x))
    }

    pub fn scale(&self, x: &State) -> ScaledState {
        to_scaled(x, self.params.d()).expect("d >= 1 by construction")
    }
}

/// Which Lyapunov candidate to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LyapunovKind {
    QuadraticX,
    QuadraticW,
    LogCosh,
}

/// A Lyapunov candidate bound to a parameter point, evaluated on `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovFunction {
    kind: LyapunovKind,
    params: FilterParams,
}

impl LyapunovFunction {
    /// `QuadraticW` scales with `α` and so needs `r > 0`. `LogCosh` accepts
    /// `r = 0` and then selects the zero-feedback function.
    pub fn new(kind: LyapunovKind, params: FilterParams) -> Result<Self> {
        if kind == LyapunovKind::QuadraticW && params.is_feedback_free() {
            return Err(Error::Domain("the quadratic w-candidate needs alpha > 0".into()));
        }
        Ok(LyapunovFunction { kind, params })
    }

    pub fn kind(&self) -> LyapunovKind {
        self.kind
    }

    pub fn value(&self, x: &State) -> f64 {
        match self.kind {
            LyapunovKind::QuadraticX => v_quadratic_x(x),
            LyapunovKind::QuadraticW => {
                v_quadratic_w(&to_scaled(x, self.params.alpha()).expect("alpha > 0"))
            }
            LyapunovKind::LogCosh => LogCoshLyapunov::new(&self.params).value_at_state(x),
        }
    }

    /// Time derivative along the nonlinear flow.
    pub fn derivative(&self, x: &State) -> f64 {
        match self.kind {
            LyapunovKind::QuadraticX => {
                dot(&x.0, &crate::model::rhs_nonlinear(x, &self.params))
            }
            LyapunovKind::QuadraticW => {
                let a = self.params.alpha();
                let w = to_scaled(x, a).expect("alpha > 0");
                let f = to_scaled(&State(crate::model::rhs_nonlinear(x, &self.params)), a)
                    .expect("alpha > 0");
                dot(&w.0, &f.0)
            }
            LyapunovKind::LogCosh => LogCoshLyapunov::new(&self.params).derivative_at_state(x),
        }
    }
}

/// Matrix families whose symmetric parts are certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatrixFamily {
    /// `A_s`, for the candidate `½ xᵀx`.
    As,
    /// `B_s`, for the candidate `½ wᵀw` with `d = α`.
    Bs,
    /// `Q_s(g_min)` with `d = max(1, α)`; covers every attainable `g`.
    QsWorstCase,
}

impl MatrixFamily {
    pub const ALL: [MatrixFamily; 3] = [MatrixFamily::As, MatrixFamily::Bs, MatrixFamily::QsWorstCase];

    pub fn name(&self) -> &'static str {
        match self {
            MatrixFamily::As => "As",
            MatrixFamily::Bs => "Bs",
            MatrixFamily::QsWorstCase => "QsWorstCase",
        }
    }
}

impl fmt::Display for MatrixFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatrixFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "As" | "as" | "A" => Ok(MatrixFamily::As),
            "Bs" | "bs" | "B" => Ok(MatrixFamily::Bs),
            "QsWorstCase" | "qsworstcase" | "Qs" | "qs" | "Q" => Ok(MatrixFamily::QsWorstCase),
            other => Err(Error::Invalid(format!(
                "unknown matrix family '{other}' (expected As, Bs or QsWorstCase)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NegativeDefinite,
    NegativeSemidefinite,
    Indefinite,
}

impl Verdict {
    /// Classifies by the largest eigenvalue.
    pub fn from_max_eigenvalue(max: f64, tol: f64) -> Verdict {
        if max < -tol {
            Verdict::NegativeDefinite
        } else if max.abs() <= tol {
            Verdict::NegativeSemidefinite
        } else {
            Verdict::Indefinite
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::NegativeDefinite => "NegativeDefinite",
            Verdict::NegativeSemidefinite => "NegativeSemidefinite",
            Verdict::Indefinite => "Indefinite",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Definiteness verdict for one family member. Eigenvalues are those of the
/// symmetrised matrix divided by `ω₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub omega0: f64,
    pub r: f64,
    pub family: MatrixFamily,
    pub min_eig: f64,
    pub max_eig: f64,
    pub verdict: Verdict,
    pub tol: f64,
}

/// Symmetric part of the `ω₀ = 1` family member at resonance `r`.
///
/// Only requires `r ≥ 0`, so threshold searches may bracket `r = 1` from
/// above. `QsWorstCase` needs `r > 0`.
pub fn family_matrix(family: MatrixFamily, r: f64) -> Result<Matrix4> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::Range {
            field: "r",
            value: r,
            expected: "r >= 0",
        });
    }
    let alpha = alpha_of(r);
    let alpha4 = 4.0 * r;
    match family {
        MatrixFamily::As => Ok(Matrix4::from_rows([
            [-1.0, 0.0, 0.0, -alpha4],
            [1.0, -1.0, 0.0, 0.0],
            [0.0, 1.0, -1.0, 0.0],
            [0.0, 0.0, 1.0, -1.0],
        ])
        .symmetrize()),
        MatrixFamily::Bs => Ok(Matrix4::from_rows([
            [-1.0, 0.0, 0.0, -alpha],
            [alpha, -1.0, 0.0, 0.0],
            [0.0, alpha, -1.0, 0.0],
            [0.0, 0.0, alpha, -1.0],
        ])
        .symmetrize()),
        MatrixFamily::QsWorstCase => {
            if r == 0.0 {
                return Err(Error::Domain("QsWorstCase requires r > 0".into()));
            }
            let d = alpha.max(1.0);
            let d4 = alpha4.max(1.0);
            let g_min = d4.min(d4 / alpha4);
            Ok(Matrix4::from_rows([
                [-1.0, 0.0, 0.0, -d],
                [d, -1.0, 0.0, 0.0],
                [0.0, d, -1.0, 0.0],
                [0.0, 0.0, d, -g_min],
            ])
            .symmetrize())
        }
    }
}

/// Largest eigenvalue of [`family_matrix`].
pub fn family_max_eigenvalue(family: MatrixFamily, r: f64) -> Result<f64> {
    Ok(sym_eigvals(&family_matrix(family, r)?, 0.0)?[3])
}

/// Certifies the symmetric part of `family` at `p`.
///
/// `A` and `B` are symmetrised and divided by `ω₀` before the
/// eigen-decomposition (`Q` carries no `ω₀`), so `tol` is scale-free.
pub fn certify(family: MatrixFamily, p: &FilterParams, tol: f64) -> Result<CertificateReport> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Range {
            field: "tol",
            value: tol,
            expected: "tol >= 0",
        });
    }
    let m = match family {
        MatrixFamily::As => matrix_a(p),
        MatrixFamily::Bs => matrix_b(p),
        MatrixFamily::QsWorstCase => {
            if p.is_feedback_free() {
                return Err(Error::Domain("QsWorstCase requires r > 0".into()));
            }
            let (g_min, _) = crate::model::g_bounds(p);
            matrix_q(p, g_min)
        }
    };
    let normalized = match family {
        MatrixFamily::QsWorstCase => m.symmetrize(),
        _ => m.symmetrize().scale(1.0 / p.omega0()),
    };
    let eig = jacobi::sym_eigvals(&normalized, 0.0)?;
    Ok(CertificateReport {
        omega0: p.omega0(),
        r: p.r(),
        family,
        min_eig: eig[0],
        max_eig: eig[3],
        verdict: Verdict::from_max_eigenvalue(eig[3], tol),
        tol,
    })
}

/// Locates by bisection the resonance at which `family` stops being
/// negative definite (largest eigenvalue reaching `-DEFAULT_VERDICT_TOL`),
/// to within `tol` in `r`.
pub fn definiteness_threshold(family: MatrixFamily, r_lo: f64, r_hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Range {
            field: "tol",
            value: tol,
            expected: "tol > 0",
        });
    }
    if !(r_lo < r_hi) {
        return Err(Error::Invalid(format!("empty bracket [{r_lo}, {r_hi}]")));
    }
    let definite = |r: f64| -> Result<bool> {
        Ok(family_max_eigenvalue(family, r)? < -DEFAULT_VERDICT_TOL)
    };
    let (mut lo, mut hi) = (r_lo, r_hi);
    let lo_state = definite(lo)?;
    if lo_state == definite(hi)? {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if definite(mid)? == lo_state {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `Q_s(g)` for an arbitrary `g`, used to study monotonicity in `g`.
pub fn qs_of_g(p: &FilterParams, g: f64) -> Matrix4 {
    matrix_q(p, g).symmetrize()
}

/// `-I + (d/2) G(f(g))`, the alternative assembly of `Q_s`.
pub fn qs_via_g_matrix(p: &FilterParams, g: f64) -> Matrix4 {
    let d = p.d();
    Matrix4::identity().scale(-1.0) + matrix_g(f_scalar(g, d)).scale(0.5 * d)
}
