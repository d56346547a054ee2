//! Dense 4×4 matrices and 4-vectors.
//!
//! The filter has exactly four states, so everything here is fixed-size and
//! lives on the stack.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

pub type Vec4 = [f64; 4];

/// Dense real 4×4 matrix stored row-major.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix4(pub [[f64; 4]; 4]);

impl Matrix4 {
    pub const fn zeros() -> Self {
        Matrix4([[0.0; 4]; 4])
    }

    pub const fn identity() -> Self {
        Self::diag([1.0; 4])
    }

    pub const fn diag(d: Vec4) -> Self {
        Matrix4([
            [d[0], 0.0, 0.0, 0.0],
            [0.0, d[1], 0.0, 0.0],
            [0.0, 0.0, d[2], 0.0],
            [0.0, 0.0, 0.0, d[3]],
        ])
    }

    pub const fn from_rows(rows: [[f64; 4]; 4]) -> Self {
        Matrix4(rows)
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                t.0[j][i] = self.0[i][j];
            }
        }
        t
    }

    /// `½(M + Mᵀ)`, the matrix with the same quadratic form as `self`.
    pub fn symmetrize(&self) -> Self {
        let mut s = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                s.0[i][j] = 0.5 * (self.0[i][j] + self.0[j][i]);
            }
        }
        s
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|v| *v *= k);
        m
    }

    pub fn mul_vec(&self, v: &Vec4) -> Vec4 {
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(&self.0) {
            *o = dot(row, v);
        }
        out
    }

    /// Quadratic form `vᵀ M v`.
    pub fn quadratic_form(&self, v: &Vec4) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    /// Largest `|M[i][j] - M[j][i]|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                worst = worst.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Solves `M x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` when a pivot vanishes.
    pub fn solve(&self, b: &Vec4) -> Option<Vec4> {
        let mut a = self.0;
        let mut x = *b;
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap_or(col);
            if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
                return None;
            }
            a.swap(col, pivot);
            x.swap(col, pivot);
            for row in (col + 1)..4 {
                let factor = a[row][col] / a[col][col];
                if factor != 0.0 {
                    for k in col..4 {
                        a[row][k] -= factor * a[col][k];
                    }
                    x[row] -= factor * x[col];
                }
            }
        }
        for col in (0..4).rev() {
            let tail: f64 = ((col + 1)..4).map(|k| a[col][k] * x[k]).sum();
            x[col] = (x[col] - tail) / a[col][col];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

impl Default for Matrix4 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl fmt::Debug for Matrix4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<(usize, usize)> for Matrix4 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Matrix4 {
    type Output = Matrix4;
    fn add(mut self, rhs: Matrix4) -> Matrix4 {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl Sub for Matrix4 {
    type Output = Matrix4;
    fn sub(mut self, rhs: Matrix4) -> Matrix4 {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl Mul for Matrix4 {
    type Output = Matrix4;
    fn mul(self, rhs: Matrix4) -> Matrix4 {
        let mut out = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

pub fn dot(a: &Vec4, b: &Vec4) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &Vec4) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &Vec4) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
