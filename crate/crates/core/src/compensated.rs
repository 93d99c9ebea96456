//! Double-double helpers for the cached rotation.
//!
//! A `Mat3` rotation is orthogonal only up to its rounded entries, and that
//! fixed defect biases `|exp(A) v|` the same way on every step. Keeping the
//! rotation as an unevaluated sum `hi + lo`, orthogonal to about `1e-32`, and
//! applying it with a single final rounding removes the bias.

use crate::linalg3::{Mat3, Vec3};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    fn scale(self, s: f64) -> Dd {
        self.mul(Dd::from_f64(s))
    }
}

type DdMat = [[Dd; 3]; 3];

fn dd_matmul(a: &DdMat, b: &DdMat) -> DdMat {
    let mut out = [[Dd::default(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).fold(Dd::default(), |acc, k| acc.add(a[i][k].mul(b[k][j])));
        }
    }
    out
}

fn dd_transpose(a: &DdMat) -> DdMat {
    let mut out = [[Dd::default(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// A 3x3 matrix held as `hi + lo`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct SplitMat3 {
    pub hi: Mat3,
    pub lo: Mat3,
}

impl SplitMat3 {
    /// The orthogonal polar factor of a nearly orthogonal `m`, from two
    /// Newton-Schulz steps `X <- X (3I - X^T X) / 2` in double-double.
    pub fn orthogonalized(m: &Mat3) -> SplitMat3 {
        let mut x: DdMat = m.0.map(|row| row.map(Dd::from_f64));
        for _ in 0..2 {
            let gram = dd_matmul(&dd_transpose(&x), &x);
            let corr: DdMat = std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let id = if i == j { 3.0 } else { 0.0 };
                    Dd::from_f64(id).add(gram[i][j].scale(-1.0)).scale(0.5)
                })
            });
            x = dd_matmul(&x, &corr);
        }
        SplitMat3 {
            hi: Mat3(x.map(|row| row.map(|d| d.hi))),
            lo: Mat3(x.map(|row| row.map(|d| d.lo))),
        }
    }

    /// `(hi + lo) v + extra`, rounded once per component.
    pub fn mul_vec_add(&self, v: &Vec3, extra: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Dd::from_f64(extra[i]);
            for j in 0..3 {
                acc = acc.add(
                    Dd {
                        hi: self.hi.0[i][j],
                        lo: self.lo.0[i][j],
                    }
                    .mul(Dd::from_f64(v[j])),
                );
            }
            *o = acc.hi + acc.lo;
        }
        Vec3(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_prod_is_exact() {
        let (p, e) = two_prod(0.1, 0.3);
        // 0.1 * 0.3 in binary64 is not 0.03; the error term restores it.
        assert_ne!(e, 0.0);
        assert_eq!(p, 0.1 * 0.3);
    }

    #[test]
    fn orthogonalized_rotation_is_close_and_orthogonal() {
        let (s, c) = 0.7_f64.sin_cos();
        let m = Mat3([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]);
        let q = SplitMat3::orthogonalized(&m);
        assert!(q.hi.max_abs_diff(&m) <= 2.0 * f64::EPSILON);
        // |Q v|^2 - |v|^2 evaluated in double-double stays far below one ulp.
        let v = Vec3::new(0.9, 0.5, 0.4);
        let mut norm_sq = Dd::default();
        let mut v_sq = Dd::default();
        for i in 0..3 {
            let mut row = Dd::default();
            for j in 0..3 {
                row = row.add(
                    Dd {
                        hi: q.hi.0[i][j],
                        lo: q.lo.0[i][j],
                    }
                    .mul(Dd::from_f64(v[j])),
                );
            }
            norm_sq = norm_sq.add(row.mul(row));
            v_sq = v_sq.add(Dd::from_f64(v[i]).mul(Dd::from_f64(v[i])));
        }
        let defect = norm_sq.add(v_sq.scale(-1.0));
        assert!((defect.hi + defect.lo).abs() < 1e-28);
    }
}
