//! Eigenvalues of the linearised ladder.
//!
//! The closed form is `-ω₀ + ω₀ α e^{j(2k+1)π/4}`. The numeric route builds
//! the characteristic quartic by Faddeev–LeVerrier and solves it with
//! Durand–Kerner simultaneous iteration; it serves as an oracle for the
//! closed form and works for any 4×4 matrix.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix4;
use crate::model::FilterParams;

/// Four eigenvalues, sorted by argument in `[0, 2π)` and then by modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: [Complex64; 4],
    pub max_real_part: f64,
}

impl Spectrum {
    pub fn new(mut eigenvalues: [Complex64; 4]) -> Self {
        eigenvalues.sort_by(|a, b| {
            argument(a)
                .total_cmp(&argument(b))
                .then(a.norm().total_cmp(&b.norm()))
        });
        let max_real_part = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Spectrum { eigenvalues, max_real_part }
    }

    /// Largest distance between corresponding eigenvalues of two spectra.
    pub fn max_distance(&self, other: &Spectrum) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&other.eigenvalues)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn argument(z: &Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Closed-form eigenvalues of `matrix_a(p)`.
pub fn eigvals_a_closed(p: &FilterParams) -> Spectrum {
    let w0 = p.omega0();
    // ω₀ α cos(π/4) = ω₀ r^¼, kept exact at r = 1 and r = 1/16
    let q = w0 * p.r().sqrt().sqrt();
    let signs = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
    Spectrum::new(signs.map(|(sr, si)| Complex64::new(-w0 + sr * q, si * q)))
}

/// `ω₀ (1 - r^¼) = -max Re λ`.
pub fn stability_margin(p: &FilterParams) -> f64 {
    p.omega0() * (1.0 - p.r().sqrt().sqrt())
}

/// Coefficients `[c₀, c₁, c₂, c₃]` of the monic characteristic polynomial
/// `λ⁴ + c₃λ³ + c₂λ² + c₁λ + c₀` (Faddeev–LeVerrier).
pub fn characteristic_polynomial(m: &Matrix4) -> [f64; 4] {
    let mut coeffs = [0.0; 4];
    let mut aux = Matrix4::identity();
    let mut c_prev = 1.0;
    for k in 1..=4 {
        if k > 1 {
            aux = *m * aux + Matrix4::identity().scale(c_prev);
        }
        let c = -(*m * aux).trace() / k as f64;
        coeffs[4 - k] = c;
        c_prev = c;
    }
    coeffs
}

const DK_MAX_ITER: usize = 200;
const DK_RESIDUAL_TOL: f64 = 1e-12;

fn eval_monic(c: &[f64; 4], z: Complex64) -> Complex64 {
    (((z + c[3]) * z + c[2]) * z + c[1]) * z + c[0]
}

/// Normwise backward error `|p(z)| / Σ|cₖ||z|ᵏ`.
fn backward_error(c: &[f64; 4], z: Complex64) -> f64 {
    let r = z.norm();
    let denom = (((r + c[3].abs()) * r + c[2].abs()) * r + c[1].abs()) * r + c[0].abs();
    if denom == 0.0 {
        0.0
    } else {
        eval_monic(c, z).norm() / denom
    }
}

/// Roots of a real monic quartic by Durand–Kerner iteration.
///
/// Repeated roots only converge to roughly `ε^{1/m}`; clusters that pass a
/// multiplicity test are replaced by their centroid, which is well
/// conditioned. Near-real roots are snapped to
/// the real axis and complex roots are paired with their conjugates.
pub fn quartic_roots(coeffs: &[f64; 4]) -> Result<[Complex64; 4]> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Invalid("polynomial coefficients must be finite".into()));
    }
    // scale λ = s μ so the roots are of order one
    let s = (0..4)
        .map(|k| coeffs[k].abs().powf(1.0 / (4 - k) as f64))
        .fold(0.0, f64::max);
    if s == 0.0 {
        return Ok([Complex64::new(0.0, 0.0); 4]);
    }
    let c = [
        coeffs[0] / s.powi(4),
        coeffs[1] / s.powi(3),
        coeffs[2] / (s * s),
        coeffs[3] / s,
    ];

    let seed = Complex64::new(0.4, 0.9);
    let mut z = [seed, seed * seed, seed * seed * seed, seed * seed * seed * seed];
    // simultaneous (Jacobi-style) updates keep Σzᵢ = -c₃, so cluster
    // centroids stay accurate even where individual roots cannot be
    for _ in 0..DK_MAX_ITER {
        let mut next = z;
        let mut biggest = 0.0_f64;
        for i in 0..4 {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..4 {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let delta = eval_monic(&c, z[i]) / denom;
            next[i] = z[i] - delta;
            biggest = biggest.max(delta.norm() / z[i].norm().max(1.0));
        }
        z = next;
        if biggest <= 1e-16 {
            break;
        }
    }

    let residual = z.iter().map(|&zi| backward_error(&c, zi)).fold(0.0, f64::max);
    if !(residual <= DK_RESIDUAL_TOL) {
        return Err(Error::NoConvergence {
            iterations: DK_MAX_ITER,
            residual,
        });
    }

    merge_clusters(&c, &mut z);
    clean_conjugates(&mut z);
    Ok(z.map(|zi| zi * s))
}

/// Taylor coefficients of the monic quartic around `z`, alongside the same
/// coefficients built from `|cₖ|` and `|z|` (their rounding scale).
fn taylor_coefficients(c: &[f64; 4], z: Complex64) -> ([Complex64; 5], [f64; 5]) {
    let mut t = [
        Complex64::new(c[0], 0.0),
        Complex64::new(c[1], 0.0),
        Complex64::new(c[2], 0.0),
        Complex64::new(c[3], 0.0),
        Complex64::new(1.0, 0.0),
    ];
    let mut a = [c[0].abs(), c[1].abs(), c[2].abs(), c[3].abs(), 1.0];
    let r = z.norm();
    // repeated synthetic division
    for k in 0..4 {
        for j in (k..4).rev() {
            t[j] += t[j + 1] * z;
            a[j] += a[j + 1] * r;
        }
    }
    (t, a)
}

const CLUSTER_RADIUS: f64 = 1e-3;
const MULTIPLICITY_TOL: f64 = 1e-10;

/// Replaces clusters that behave like a multiple root by their centroid.
///
/// Roots closer than `CLUSTER_RADIUS` (scaled units) form a candidate
/// cluster of size `m`. Its centroid is refined as a root of `p^(m-1)` and
/// the cluster is accepted when the first `m` Taylor coefficients there
/// vanish to `MULTIPLICITY_TOL` relative to their rounding scale.
fn merge_clusters(c: &[f64; 4], z: &mut [Complex64; 4]) {
    let mut label = [0usize, 1, 2, 3];
    fn find(label: &mut [usize; 4], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            if (z[i] - z[j]).norm() <= CLUSTER_RADIUS {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    for root in 0..4 {
        let members: Vec<usize> = (0..4).filter(|&i| find(&mut label, i) == root).collect();
        let m = members.len();
        if m < 2 {
            continue;
        }
        // an m-fold root is a simple root of p^(m-1); polish the centroid
        // there with Newton's method
        let mut centroid = members.iter().map(|&i| z[i]).sum::<Complex64>() / m as f64;
        for _ in 0..8 {
            let (t, _) = taylor_coefficients(c, centroid);
            if t[m].norm() == 0.0 {
                break;
            }
            let step = t[m - 1] / (t[m] * m as f64);
            centroid -= step;
            if step.norm() <= f64::EPSILON * centroid.norm().max(1.0) {
                break;
            }
        }
        let (t, scale) = taylor_coefficients(c, centroid);
        let multiple =
            (0..m).all(|k| t[k].norm() <= MULTIPLICITY_TOL * scale[k].max(f64::MIN_POSITIVE));
        if multiple {
            for &i in &members {
                z[i] = centroid;
            }
        }
    }
}

fn clean_conjugates(z: &mut [Complex64; 4]) {
    for zi in z.iter_mut() {
        if zi.im.abs() <= 1e-14 * zi.norm().max(1.0) {
            zi.im = 0.0;
        }
    }
    let mut used = [false; 4];
    for i in 0..4 {
        if used[i] || z[i].im <= 0.0 {
            continue;
        }
        let partner = (0..4)
            .filter(|&j| !used[j] && j != i && z[j].im < 0.0)
            .min_by(|&a, &b| (z[a].conj() - z[i]).norm().total_cmp(&(z[b].conj() - z[i]).norm()));
        if let Some(j) = partner {
            let avg = 0.5 * (z[i] + z[j].conj());
            z[i] = avg;
            z[j] = avg.conj();
            used[i] = true;
            used[j] = true;
        }
    }
}

/// Eigenvalues of an arbitrary real 4×4 matrix via its characteristic
/// polynomial. `tol` is the accepted relative residual
/// `|det(M - λI)| / ‖M‖⁴` at each returned eigenvalue.
pub fn eigvals_numeric(m: &Matrix4, tol: f64) -> Result<Spectrum> {
    if !m.is_finite() {
        return Err(Error::Invalid("matrix has non-finite entries".into()));
    }
    let coeffs = characteristic_polynomial(m);
    let roots = quartic_roots(&coeffs)?;
    let scale = m.max_abs().max(f64::MIN_POSITIVE).powi(4);
    let residual = roots
        .iter()
        .map(|&z| eval_monic(&coeffs, z).norm() / scale)
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::NoConvergence {
            iterations: DK_MAX_ITER,
            residual,
        });
    }
    Ok(Spectrum::new(roots))
}
