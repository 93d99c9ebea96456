//! Matrix functions of the scaled skew field matrix.
//!
//! With `A = (h/eps) * skew(B)` and `theta = h|B|/eps`, a 3x3 skew matrix
//! satisfies `A^3 = -theta^2 A`. Any entire function with real Taylor
//! coefficients then collapses to
//!
//! ```text
//! f(A) = f(0) I + (Im f(i theta) / theta) A + ((f(0) - Re f(i theta)) / theta^2) A^2
//! ```
//!
//! which is how `exp`, `phi1(z) = (e^z - 1)/z` and `phi2(z) = (e^z - 1 - z)/z^2`
//! are evaluated. No general matrix exponential is involved.

use crate::compensated::SplitMat3;
use crate::error::{Error, Result};
use crate::linalg3::{Mat3, Vec3};

/// Below this angle the scalar coefficients come from truncated Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// Coefficients `(c0, c1, c2)` of `f(A) = c0 I + c1 A + c2 A^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewCoefficients {
    pub identity: f64,
    pub linear: f64,
    pub quadratic: f64,
}

impl SkewCoefficients {
    fn assemble(&self, a: &Mat3, a2: &Mat3) -> Mat3 {
        Mat3::IDENTITY.scale(self.identity) + a.scale(self.linear) + a2.scale(self.quadratic)
    }
}

/// Coefficients for `exp`, `phi1`, `phi2` at gyration angle `theta`.
///
/// Only `|theta|` matters: every coefficient is even in `theta`.
pub fn skew_coefficients(theta: f64) -> [SkewCoefficients; 3] {
    let t = theta.abs();
    if t < SERIES_THRESHOLD {
        series_coefficients(t)
    } else {
        closed_form_coefficients(t)
    }
}

pub(crate) fn series_coefficients(t: f64) -> [SkewCoefficients; 3] {
    let t2 = t * t;
    // sin t / t
    let sinc = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0));
    // (1 - cos t) / t^2
    let versc = 0.5 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0 * (1.0 - t2 / 56.0)));
    // (t - sin t) / t^3
    let sin_rem = (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0))) / 6.0;
    // (t^2/2 - 1 + cos t) / t^4
    let cos_rem = (1.0 - t2 / 30.0 * (1.0 - t2 / 56.0 * (1.0 - t2 / 90.0))) / 24.0;
    pack(sinc, versc, sin_rem, cos_rem)
}

/// Below this angle `(t - sin t)/t^3` and `(t^2/2 - 1 + cos t)/t^4` are
/// summed from their Taylor series even in the closed-form branch; the
/// closed forms lose about `eps/t` absolute accuracy to cancellation.
pub const REMAINDER_SERIES_LIMIT: f64 = 1.0;

pub(crate) fn closed_form_coefficients(t: f64) -> [SkewCoefficients; 3] {
    let half = 0.5 * t;
    let (sin_half, cos_half) = half.sin_cos();
    let sin_t = 2.0 * sin_half * cos_half;
    // Half angles keep 1 - cos t free of cancellation.
    let one_minus_cos = 2.0 * sin_half * sin_half;
    let t2 = t * t;
    let sinc = sin_t / t;
    let versc = one_minus_cos / t2;
    let (sin_rem, cos_rem) = if t < REMAINDER_SERIES_LIMIT {
        remainder_series(t2)
    } else {
        ((t - sin_t) / (t2 * t), (0.5 * t2 - one_minus_cos) / (t2 * t2))
    };
    pack(sinc, versc, sin_rem, cos_rem)
}

/// Taylor sums of `(t - sin t)/t^3` and `(t^2/2 - 1 + cos t)/t^4` in `t^2`,
/// truncated where the next term drops below `1e-17` for `t < 1`.
fn remainder_series(t2: f64) -> (f64, f64) {
    let mut sin_rem = 0.0;
    let mut cos_rem = 0.0;
    // (t - sin t)/t^3 = sum_k (-t^2)^k / (2k+3)!, (.)/t^4 = sum_k (-t^2)^k / (2k+4)!
    for k in (0..=8).rev() {
        let k = k as f64;
        sin_rem = 1.0 / factorial(2.0 * k + 3.0) - t2 * sin_rem;
        cos_rem = 1.0 / factorial(2.0 * k + 4.0) - t2 * cos_rem;
    }
    (sin_rem, cos_rem)
}

fn factorial(n: f64) -> f64 {
    (2..=n as u32).fold(1.0, |acc, k| acc * k as f64)
}

fn pack(sinc: f64, versc: f64, sin_rem: f64, cos_rem: f64) -> [SkewCoefficients; 3] {
    [
        SkewCoefficients {
            identity: 1.0,
            linear: sinc,
            quadratic: versc,
        },
        SkewCoefficients {
            identity: 1.0,
            linear: versc,
            quadratic: sin_rem,
        },
        SkewCoefficients {
            identity: 0.5,
            linear: sin_rem,
            quadratic: cos_rem,
        },
    ]
}

/// Cached `exp(A)`, `phi1(A)`, `phi2(A)` and their counterparts at `-A`
/// for one stepsize and one field.
///
/// Immutable; a new stepsize or scaling parameter needs a new rotor.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotor {
    field: Vec3,
    h: f64,
    eps: f64,
    theta: f64,
    generator: Mat3,
    exp_a: Mat3,
    phi1_a: Mat3,
    phi2_a: Mat3,
    exp_neg_a: Mat3,
    phi1_neg_a: Mat3,
    phi2_neg_a: Mat3,
    exp_a_split: SplitMat3,
}

impl Rotor {
    /// Builds the rotor for stepsize `h` (negative `h` is allowed and
    /// steps backwards) and scaling parameter `eps > 0`.
    pub fn new(field: Vec3, h: f64, eps: f64) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::NonFinite { what: "magnetic field" });
        }
        if !h.is_finite() {
            return Err(Error::NonFinite { what: "stepsize" });
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be finite and positive, got {eps}"),
            });
        }
        let scale = h / eps;
        let generator = Mat3::skew(field).scale(scale);
        let theta = scale * field.norm();
        let squared = generator * generator;
        let neg = -generator;
        let [exp_c, phi1_c, phi2_c] = skew_coefficients(theta);
        // f(-A) = c0 I - c1 A + c2 A^2, which is exactly f(A)^T.
        let rotor = Rotor {
            field,
            h,
            eps,
            theta,
            generator,
            exp_a: exp_c.assemble(&generator, &squared),
            phi1_a: phi1_c.assemble(&generator, &squared),
            phi2_a: phi2_c.assemble(&generator, &squared),
            exp_neg_a: exp_c.assemble(&neg, &squared),
            phi1_neg_a: phi1_c.assemble(&neg, &squared),
            phi2_neg_a: phi2_c.assemble(&neg, &squared),
            exp_a_split: SplitMat3::orthogonalized(&exp_c.assemble(&generator, &squared)),
        };
        if !rotor.exp_a.is_finite() || !rotor.phi1_a.is_finite() || !rotor.phi2_a.is_finite() {
            return Err(Error::NonFinite { what: "rotor matrices" });
        }
        Ok(rotor)
    }

    pub fn field(&self) -> Vec3 {
        self.field
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Gyration angle per step, `h|B|/eps` (signed like `h`).
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `cos(theta / 2)`; the moment bound degrades as this approaches zero.
    pub fn cos_half_theta(&self) -> f64 {
        (0.5 * self.theta).cos()
    }

    /// `A = (h/eps) skew(B)`.
    pub fn generator(&self) -> &Mat3 {
        &self.generator
    }

    pub fn exp_a(&self) -> &Mat3 {
        &self.exp_a
    }

    pub fn phi1_a(&self) -> &Mat3 {
        &self.phi1_a
    }

    pub fn phi2_a(&self) -> &Mat3 {
        &self.phi2_a
    }

    pub fn exp_neg_a(&self) -> &Mat3 {
        &self.exp_neg_a
    }

    pub fn phi1_neg_a(&self) -> &Mat3 {
        &self.phi1_neg_a
    }

    pub fn phi2_neg_a(&self) -> &Mat3 {
        &self.phi2_neg_a
    }

    /// `exp(A) v + extra`, using a double-double copy of `exp(A)` that is
    /// orthogonal far below rounding and a single rounding per component.
    ///
    /// With the plain matrix, the exact-arithmetic defect of its rounded
    /// entries shifts `|v|^2` by the same ~1e-17 on every step.
    pub fn rotate_add(&self, v: &Vec3, extra: &Vec3) -> Vec3 {
        self.exp_a_split.mul_vec_add(v, extra)
    }

    /// Max entrywise residual of `phi1(-A) exp(A) - phi1(A)`.
    pub fn phi_identity_residual(&self) -> f64 {
        (self.phi1_neg_a * self.exp_a).max_abs_diff(&self.phi1_a)
    }

    /// `phi1(-A) phi1(A) - 2 phi2(A)`, whose quadratic form vanishes.
    pub fn energy_defect_matrix(&self) -> Mat3 {
        self.phi1_neg_a * self.phi1_a - self.phi2_a.scale(2.0)
    }
}
