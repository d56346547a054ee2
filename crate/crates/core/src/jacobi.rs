//! Cyclic Jacobi eigenvalue iteration for symmetric 4×4 matrices.

use crate::error::{Error, Result};
use crate::matrix::Matrix4;

const MAX_SWEEPS: usize = 64;
const OFF_DIAGONAL_TOL: f64 = 1e-14;

fn off_diagonal_norm(a: &Matrix4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn frobenius_norm(a: &Matrix4) -> f64 {
    a.rows().iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// `tol` bounds the accepted asymmetry `max |M[i][j] - M[j][i]|`; the
/// symmetric part is diagonalised. Sweeps stop once the off-diagonal
/// Frobenius norm falls below `1e-14` relative to the matrix norm.
pub fn sym_eigvals(m: &Matrix4, tol: f64) -> Result<[f64; 4]> {
    if !m.is_finite() {
        return Err(Error::Invalid("matrix has non-finite entries".into()));
    }
    let asymmetry = m.max_asymmetry();
    if asymmetry > tol {
        return Err(Error::NotSymmetric { asymmetry, tol });
    }
    let mut a = m.symmetrize();
    let scale = frobenius_norm(&a);
    if scale == 0.0 {
        return Ok([0.0; 4]);
    }
    let target = OFF_DIAGONAL_TOL * scale;

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                residual: off_diagonal_norm(&a),
            });
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                rotate(&mut a, p, q);
            }
        }
        sweeps += 1;
    }

    let mut eig = [a[(0, 0)], a[(1, 1)], a[(2, 2)], a[(3, 3)]];
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Applies the rotation that zeroes `a[p][q]`.
fn rotate(a: &mut Matrix4, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    // smaller root of t² + 2θt - 1 = 0
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..4 {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..4 {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
}
