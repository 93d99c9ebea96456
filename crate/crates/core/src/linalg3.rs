//! Fixed-size 3-vectors and 3x3 matrices.
//!
//! Everything here is a plain `Copy` value. Operations are written out
//! component by component so results do not depend on vectorization.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real 3-vector: positions, velocities, forces and the magnetic field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Vec3([a, b, c])
    }

    /// Builds a vector from user input, rejecting NaN and infinities.
    pub fn try_new(a: f64, b: f64, c: f64, what: &'static str) -> Result<Self> {
        let v = Vec3::new(a, b, c);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { what })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        Vec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Max-norm, used for fixed-point residuals.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3([s * self.0[0], s * self.0[1], s * self.0[2]])
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Vec3) -> Vec3 {
        Vec3([
            self.0[0] + s * other.0[0],
            self.0[1] + s * other.0[1],
            self.0[2] + s * other.0[2],
        ])
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, rhs: Vec3) {
        *self = *self - rhs;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        rhs.scale(self)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        self.scale(rhs)
    }
}

/// A real 3x3 matrix stored row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_diagonal(d: Vec3) -> Mat3 {
        Mat3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    /// The skew matrix `S` of `b` with `S v = v x b` for every `v`.
    ///
    /// Rows are `(0, b3, -b2)`, `(-b3, 0, b1)`, `(b2, -b1, 0)`.
    pub fn skew(b: Vec3) -> Mat3 {
        let [b1, b2, b3] = b.0;
        Mat3([[0.0, b3, -b2], [-b3, 0.0, b1], [b2, -b1, 0.0]])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|c| c.is_finite())
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3(self.0[i])
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        Vec3([self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v)])
    }

    pub fn matmul(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = self.0[i][0] * other.0[0][j] + self.0[i][1] * other.0[1][j] + self.0[i][2] * other.0[2][j];
            }
        }
        Mat3(out)
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        self.map(|c| s * c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat3 {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|c| *c = f(*c));
        Mat3(out)
    }

    fn zip_with(&self, other: &Mat3, f: impl Fn(f64, f64) -> f64) -> Mat3 {
        let mut out = self.0;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = f(*entry, other.0[i][j]);
            }
        }
        Mat3(out)
    }

    /// Largest entrywise absolute value.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        (*self - *other).max_abs()
    }

    /// `w^T M w`
    pub fn quadratic_form(&self, w: &Vec3) -> f64 {
        w.dot(&self.mul_vec(w))
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self.map(|c| -c)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        self.matmul(&rhs)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.mul_vec(&rhs)
    }
}

impl Mul<Mat3> for f64 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        rhs.scale(self)
    }
}
