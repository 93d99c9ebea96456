//! Electric potentials `U(x)` and forces `F(x) = -grad U(x)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg3::{Mat3, Vec3};

/// Squared axial distance at or below which [`AxialInverse`] is singular.
pub const SINGULARITY_GUARD: f64 = 1e-300;

/// A scalar potential with access to its force field.
pub trait Potential: Send + Sync {
    fn value(&self, x: Vec3) -> Result<f64>;

    /// `F(x) = -grad U(x)`.
    fn force(&self, x: Vec3) -> Result<Vec3>;
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, x: Vec3) -> Result<f64> {
        (**self).value(x)
    }
    fn force(&self, x: Vec3) -> Result<Vec3> {
        (**self).force(x)
    }
}

impl<P: Potential + ?Sized> Potential for Box<P> {
    fn value(&self, x: Vec3) -> Result<f64> {
        (**self).value(x)
    }
    fn force(&self, x: Vec3) -> Result<Vec3> {
        (**self).force(x)
    }
}

impl<P: Potential + ?Sized> Potential for Arc<P> {
    fn value(&self, x: Vec3) -> Result<f64> {
        (**self).value(x)
    }
    fn force(&self, x: Vec3) -> Result<Vec3> {
        (**self).force(x)
    }
}

/// `U(x) = strength / sqrt(x1^2 + x2^2)`, singular on the 3-axis.
///
/// With `strength = 0.01` this is the potential of the reference
/// experiment. The force points away from the axis for positive strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxialInverse {
    pub strength: f64,
}

impl AxialInverse {
    pub const REFERENCE_STRENGTH: f64 = 0.01;

    pub fn new(strength: f64) -> Self {
        AxialInverse { strength }
    }

    fn axial_distance_squared(x: Vec3) -> Result<f64> {
        let rho2 = x[0] * x[0] + x[1] * x[1];
        if rho2 <= SINGULARITY_GUARD || !rho2.is_finite() {
            Err(Error::SingularPoint { x })
        } else {
            Ok(rho2)
        }
    }
}

impl Default for AxialInverse {
    fn default() -> Self {
        AxialInverse::new(Self::REFERENCE_STRENGTH)
    }
}

impl Potential for AxialInverse {
    fn value(&self, x: Vec3) -> Result<f64> {
        let rho2 = Self::axial_distance_squared(x)?;
        Ok(self.strength / rho2.sqrt())
    }

    fn force(&self, x: Vec3) -> Result<Vec3> {
        let rho2 = Self::axial_distance_squared(x)?;
        let s = self.strength / (rho2 * rho2.sqrt());
        Ok(Vec3::new(s * x[0], s * x[1], 0.0))
    }
}

/// `U(x) = 1/2 x^T Q x` for symmetric `Q`, so `F(x) = -Q x`.
///
/// The force is linear, so Gauss quadrature of the averaged force is exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadratic {
    q: Mat3,
}

impl Quadratic {
    pub fn new(q: Mat3) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::NonFinite {
                what: "quadratic potential matrix",
            });
        }
        if q.max_abs_diff(&q.transpose()) != 0.0 {
            return Err(Error::InvalidParameter {
                name: "potential",
                reason: "quadratic potential matrix must be symmetric".into(),
            });
        }
        Ok(Quadratic { q })
    }

    pub fn isotropic(k: f64) -> Result<Self> {
        Quadratic::new(Mat3::IDENTITY.scale(k))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.q
    }
}

impl Potential for Quadratic {
    fn value(&self, x: Vec3) -> Result<f64> {
        Ok(0.5 * self.q.quadratic_form(&x))
    }

    fn force(&self, x: Vec3) -> Result<Vec3> {
        Ok(-(self.q * x))
    }
}

/// A uniform electric field: `U(x) = -f . x`, `F(x) = f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Uniform {
    pub force: Vec3,
}

impl Uniform {
    pub fn zero() -> Self {
        Uniform { force: Vec3::ZERO }
    }
}

impl Potential for Uniform {
    fn value(&self, x: Vec3) -> Result<f64> {
        Ok(-self.force.dot(&x))
    }

    fn force(&self, _x: Vec3) -> Result<Vec3> {
        Ok(self.force)
    }
}

type ValueFn = dyn Fn(Vec3) -> Result<f64> + Send + Sync;
type GradientFn = dyn Fn(Vec3) -> Result<Vec3> + Send + Sync;

/// A potential given by closures.
///
/// Without an analytic gradient the force falls back to central
/// differences with step `1e-6 * max(1, |x|)`, which costs roughly half
/// the significant digits.
#[derive(Clone)]
pub struct UserDefined {
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
}

impl UserDefined {
    pub fn new(value: impl Fn(Vec3) -> Result<f64> + Send + Sync + 'static) -> Self {
        UserDefined {
            value: Arc::new(value),
            gradient: None,
        }
    }

    /// Adds the analytic gradient `grad U` (not the force).
    pub fn with_gradient(mut self, gradient: impl Fn(Vec3) -> Result<Vec3> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }
}

impl fmt::Debug for UserDefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserDefined")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl Potential for UserDefined {
    fn value(&self, x: Vec3) -> Result<f64> {
        (self.value)(x)
    }

    fn force(&self, x: Vec3) -> Result<Vec3> {
        match &self.gradient {
            Some(g) => Ok(-g(x)?),
            None => Ok(-central_difference_gradient(&*self.value, x, 1e-6 * x.norm().max(1.0))?),
        }
    }
}

/// Central-difference gradient of `f` at `x` with step `delta`.
pub fn central_difference_gradient(f: &dyn Fn(Vec3) -> Result<f64>, x: Vec3, delta: f64) -> Result<Vec3> {
    let mut grad = [0.0; 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let mut plus = x;
        let mut minus = x;
        plus.0[i] += delta;
        minus.0[i] -= delta;
        *g = (f(plus)? - f(minus)?) / (2.0 * delta);
    }
    Ok(Vec3(grad))
}

/// Potentials selectable by name, as used in run configurations.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedPotential {
    AxialInverse(AxialInverse),
    Quadratic(Quadratic),
    Uniform(Uniform),
}

impl NamedPotential {
    /// Parses `name[:p1,p2,...]`.
    ///
    /// * `axial-inverse[:strength]` (default strength 0.01)
    /// * `quadratic[:k | :q11,q22,q33 | :q11,...,q33]` (default `k = 1`)
    /// * `uniform:f1,f2,f3`
    /// * `zero`
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, params) = match spec.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p)),
            None => (spec.trim(), None),
        };
        let values = match params {
            Some(p) => parse_list(p)?,
            None => Vec::new(),
        };
        let bad = |reason: String| Error::InvalidParameter {
            name: "potential",
            reason,
        };
        match (name, values.as_slice()) {
            ("axial-inverse", []) => Ok(NamedPotential::AxialInverse(AxialInverse::default())),
            ("axial-inverse", [s]) => Ok(NamedPotential::AxialInverse(AxialInverse::new(*s))),
            ("quadratic", []) => Ok(NamedPotential::Quadratic(Quadratic::isotropic(1.0)?)),
            ("quadratic", [k]) => Ok(NamedPotential::Quadratic(Quadratic::isotropic(*k)?)),
            ("quadratic", [a, b, c]) => Ok(NamedPotential::Quadratic(Quadratic::new(Mat3::from_diagonal(
                Vec3::new(*a, *b, *c),
            ))?)),
            ("quadratic", q) if q.len() == 9 => Ok(NamedPotential::Quadratic(Quadratic::new(Mat3([
                [q[0], q[1], q[2]],
                [q[3], q[4], q[5]],
                [q[6], q[7], q[8]],
            ]))?)),
            ("uniform", [a, b, c]) => Ok(NamedPotential::Uniform(Uniform {
                force: Vec3::new(*a, *b, *c),
            })),
            ("zero", []) => Ok(NamedPotential::Uniform(Uniform::zero())),
            ("axial-inverse" | "quadratic" | "uniform" | "zero", v) => {
                Err(bad(format!("`{name}` does not take {} parameter(s)", v.len())))
            }
            _ => Err(bad(format!(
                "unknown potential `{name}` (expected axial-inverse, quadratic, uniform or zero)"
            ))),
        }
    }

    /// Canonical textual form, accepted by [`NamedPotential::parse`].
    pub fn describe(&self) -> String {
        match self {
            NamedPotential::AxialInverse(p) => format!("axial-inverse:{}", p.strength),
            NamedPotential::Quadratic(p) => {
                let q = p.matrix().0;
                let flat: Vec<String> = q.iter().flatten().map(|c| c.to_string()).collect();
                format!("quadratic:{}", flat.join(","))
            }
            NamedPotential::Uniform(p) if p.force == Vec3::ZERO => "zero".into(),
            NamedPotential::Uniform(p) => format!("uniform:{},{},{}", p.force[0], p.force[1], p.force[2]),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            match item.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::InvalidParameter {
                    name: "potential",
                    reason: format!("`{item}` is not a finite number"),
                }),
            }
        })
        .collect()
}

impl Potential for NamedPotential {
    fn value(&self, x: Vec3) -> Result<f64> {
        match self {
            NamedPotential::AxialInverse(p) => p.value(x),
            NamedPotential::Quadratic(p) => p.value(x),
            NamedPotential::Uniform(p) => p.value(x),
        }
    }

    fn force(&self, x: Vec3) -> Result<Vec3> {
        match self {
            NamedPotential::AxialInverse(p) => p.force(x),
            NamedPotential::Quadratic(p) => p.force(x),
            NamedPotential::Uniform(p) => p.force(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_force(p: &dyn Potential, x: Vec3) -> Vec3 {
        -central_difference_gradient(&|y| p.value(y), x, 1e-6).unwrap()
    }

    #[test]
    fn axial_inverse_values() {
        let p = AxialInverse::default();
        let u = p.value(Vec3::new(0.7, 1.0, 0.1)).unwrap();
        assert!((u - 1.0 / (100.0 * 1.49_f64.sqrt())).abs() < 1e-17);
        assert!((u - 0.0081923).abs() < 1e-7);
        assert_eq!(p.value(Vec3::new(1.0, 0.0, 0.0)).unwrap(), 0.01);
    }

    #[test]
    fn axial_inverse_is_singular_on_axis() {
        let p = AxialInverse::default();
        let on_axis = Vec3::new(0.0, 0.0, 3.0);
        assert_eq!(p.value(on_axis), Err(Error::SingularPoint { x: on_axis }));
        assert!(p.force(on_axis).is_err());
    }

    #[test]
    fn axial_inverse_force_matches_finite_differences() {
        let p = AxialInverse::default();
        let x = Vec3::new(1.0, 0.0, 0.0);
        let f = p.force(x).unwrap();
        // Repulsive from the axis for positive strength.
        assert_eq!(f, Vec3::new(0.01, 0.0, 0.0));
        assert!((f - fd_force(&p, x)).max_abs() < 1e-8);
    }

    #[test]
    fn quadratic_and_zero() {
        let p = Quadratic::isotropic(1.0).unwrap();
        assert_eq!(p.value(Vec3::new(1.0, 0.0, 0.0)).unwrap(), 0.5);
        assert_eq!(p.force(Vec3::new(1.0, 2.0, 3.0)).unwrap(), Vec3::new(-1.0, -2.0, -3.0));
        let zero = UserDefined::new(|_| Ok(0.0));
        assert_eq!(zero.force(Vec3::new(0.3, -2.0, 5.0)).unwrap(), Vec3::ZERO);
        assert!(Quadratic::new(Mat3([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])).is_err());
    }

    #[test]
    fn user_defined_with_and_without_gradient() {
        let analytic = UserDefined::new(|x: Vec3| Ok(x[0] * x[1] + x[2].sin()))
            .with_gradient(|x: Vec3| Ok(Vec3::new(x[1], x[0], x[2].cos())));
        let numeric = UserDefined::new(|x: Vec3| Ok(x[0] * x[1] + x[2].sin()));
        let x = Vec3::new(0.4, -1.3, 2.2);
        let exact = Vec3::new(1.3, -0.4, -(2.2_f64.cos()));
        assert!((analytic.force(x).unwrap() - exact).max_abs() < 1e-15);
        assert!((numeric.force(x).unwrap() - exact).max_abs() < 1e-8);
    }

    #[test]
    fn forces_match_finite_differences_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = Mat3([[2.0, 0.3, -0.1], [0.3, 1.0, 0.2], [-0.1, 0.2, 0.5]]);
        let potentials: Vec<Box<dyn Potential>> = vec![
            Box::new(AxialInverse::default()),
            Box::new(Quadratic::new(q).unwrap()),
            Box::new(Uniform {
                force: Vec3::new(0.1, -0.2, 0.3),
            }),
        ];
        for p in &potentials {
            for _ in 0..100 {
                let x = loop {
                    let x = Vec3::new(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    );
                    if x[0].hypot(x[1]) > 0.3 {
                        break x;
                    }
                };
                let f = p.force(x).unwrap();
                let fd = fd_force(p.as_ref(), x);
                assert!((f - fd).norm() <= 1e-7 * (1.0 + f.norm()), "x = {x}");
            }
        }
    }

    #[test]
    fn axial_inverse_is_rotation_invariant() {
        let p = AxialInverse::default();
        let x = Vec3::new(0.7, 1.0, 0.1);
        let u = p.value(x).unwrap();
        for alpha in [0.1, 1.0, 2.5, -4.0] {
            let (s, c) = f64::sin_cos(alpha);
            let rx = Vec3::new(c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]);
            assert!((p.value(rx).unwrap() - u).abs() <= 1e-14);
        }
    }

    #[test]
    fn parse_named_potentials() {
        assert_eq!(
            NamedPotential::parse("axial-inverse").unwrap(),
            NamedPotential::AxialInverse(AxialInverse::new(0.01))
        );
        assert_eq!(
            NamedPotential::parse("quadratic:2").unwrap(),
            NamedPotential::Quadratic(Quadratic::isotropic(2.0).unwrap())
        );
        assert_eq!(
            NamedPotential::parse("zero").unwrap(),
            NamedPotential::Uniform(Uniform::zero())
        );
        assert!(NamedPotential::parse("quadratic:1,2").is_err());
        assert!(NamedPotential::parse("coulomb").is_err());
        assert!(NamedPotential::parse("uniform:1,x,3").is_err());
        for s in [
            "axial-inverse:0.5",
            "quadratic:1,0,0,0,2,0,0,0,3",
            "uniform:1,2,3",
            "zero",
        ] {
            let p = NamedPotential::parse(s).unwrap();
            assert_eq!(NamedPotential::parse(&p.describe()).unwrap(), p);
        }
    }
}
