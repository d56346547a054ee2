//! Scalar kernels around `ln cosh` and `tanh`.
//!
//! All Lyapunov and discrete-gradient formulas in the crate reduce to these.
//! They are written to stay accurate both near zero and deep in saturation.

use std::f64::consts::LN_2;

/// `ln(cosh(x))` without overflow and without cancellation near zero.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        // cosh x - 1 = 2 sinh²(x/2)
        let s = (0.5 * a).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        a + (-2.0 * a).exp().ln_1p() - LN_2
    }
}

/// `tanh(x)/x`, continuous at zero.
pub fn tanhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0
    } else {
        x.tanh() / x
    }
}

/// `atanh(u)/u`, continuous at zero.
fn atanhc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 + u2 / 3.0 + u2 * u2 / 5.0
    } else {
        u.atanh() / u
    }
}

/// Divided difference `(ln cosh b - ln cosh a)/(b - a)`, equal to `tanh a`
/// when `a == b`.
///
/// With `m = (a+b)/2` and `h = (b-a)/2` the difference of logs is
/// `2 atanh(tanh m · tanh h)`, which is free of cancellation for nearby
/// points. Far-apart points fall back to the plain quotient.
pub fn ln_cosh_divided_difference(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let tm = m.tanh();
    let u = tm * h.tanh();
    if u.abs() <= 0.5 {
        atanhc(u) * tm * tanhc(h)
    } else {
        (ln_cosh(b) - ln_cosh(a)) / (b - a)
    }
}

/// Partial derivative of [`ln_cosh_divided_difference`] with respect to `b`.
///
/// Close to coincidence the exact expression cancels, so the limit
/// `½ sech²(m)` is used instead.
pub fn ln_cosh_divided_difference_db(a: f64, b: f64) -> f64 {
    let gap = b - a;
    if gap.abs() < 1e-6 * a.abs().max(b.abs()).max(1.0) {
        let t = (0.5 * (a + b)).tanh();
        0.5 * (1.0 - t * t)
    } else {
        (b.tanh() - ln_cosh_divided_difference(a, b)) / gap
    }
}
