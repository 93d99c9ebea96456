//! One-step maps for `x' = v`, `v' = (1/eps) v x B + F(x)` and a driver
//! that strings them into trajectories.
//!
//! * [`eep_step`]: the exponential energy-preserving scheme
//!
//!   ```text
//!   x1 = x0 + h phi1(A) v0 + h^2 phi2(A) I(x0, x1)
//!   v1 = exp(A) v0 + h phi1(A) I(x0, x1),     A = (h/eps) skew(B)
//!   ```
//!
//!   where `I(x0, x1)` is the force averaged along the segment `[x0, x1]`.
//!   The implicit position equation is solved by fixed-point iteration.
//! * [`boris_step`]: the Boris pusher with an exact `tan(theta/2)` rotation.
//! * [`rk4_step`] / [`rk4_reference`]: classical Runge-Kutta, for reference
//!   trajectories only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg3::Vec3;
use crate::potential::Potential;
use crate::quadrature::{averaged_force, GaussRule};
use crate::rotor::Rotor;

/// Largest `h|B|/eps` accepted for RK4 reference trajectories.
pub const REFERENCE_MAX_GYRATION: f64 = 0.05;

/// A point `(t, x, v)` of a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
}

impl State {
    pub fn new(t: f64, x: Vec3, v: Vec3) -> Self {
        State { t, x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.v.is_finite()
    }

    /// Max-norm distance in phase space, ignoring time.
    pub fn phase_distance(&self, other: &State) -> f64 {
        (self.x - other.x).max_abs().max((self.v - other.v).max_abs())
    }
}

/// Fixed-point iteration controls for the implicit position update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpSettings {
    /// Max-norm tolerance on successive position iterates.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FpSettings {
    fn default() -> Self {
        FpSettings {
            tol: 1e-16,
            max_iter: 50,
        }
    }
}

impl FpSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "fp_tol",
                reason: format!("must be finite and positive, got {}", self.tol),
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                name: "fp_max_iter",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Result of one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub state: State,
    /// Fixed-point sweeps used (zero for explicit schemes).
    pub fp_iters: usize,
    /// Last successive-iterate difference (zero for explicit schemes).
    pub fp_residual: f64,
}

impl StepReport {
    fn explicit(state: State) -> Self {
        StepReport {
            state,
            fp_iters: 0,
            fp_residual: 0.0,
        }
    }
}

/// Difference between iterates that is indistinguishable from rounding.
fn rounding_floor(x: &Vec3) -> f64 {
    8.0 * f64::EPSILON * x.max_abs().max(1.0)
}

/// One step of the exponential energy-preserving scheme.
///
/// The stepsize and scaling parameter are taken from `rotor`. The iteration
/// starts from `x0 + h phi1(A) v0` and stops when successive iterates differ
/// by at most `fp.tol`, or when the difference stops shrinking while already
/// at rounding level (a tolerance of `1e-16` is below the spacing of doubles
/// near 1). The velocity is then formed once from the converged position.
pub fn eep_step<P: Potential + ?Sized>(
    s: &State,
    rotor: &Rotor,
    p: &P,
    rule: &GaussRule,
    fp: &FpSettings,
) -> Result<StepReport> {
    let h = rotor.h();
    let free = s.x + (*rotor.phi1_a() * s.v).scale(h);
    let phi2_h2 = rotor.phi2_a().scale(h * h);

    let mut x = free;
    let mut previous = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0;
    while iters < fp.max_iter {
        iters += 1;
        let avg = averaged_force(p, rule, s.x, x)?;
        let next = free + phi2_h2 * avg;
        residual = (next - x).max_abs();
        x = next;
        if !residual.is_finite() {
            break;
        }
        if residual <= fp.tol || (residual >= previous && residual <= rounding_floor(&x)) {
            converged = true;
            break;
        }
        previous = residual;
    }
    if !converged {
        return Err(Error::FixedPointDiverged {
            iterations: iters,
            residual,
        });
    }

    let avg = averaged_force(p, rule, s.x, x)?;
    let v = rotor.rotate_add(&s.v, &(*rotor.phi1_a() * avg).scale(h));
    Ok(StepReport {
        state: State::new(s.t + h, x, v),
        fp_iters: iters,
        fp_residual: residual,
    })
}

/// One step of the Boris pusher in synchronized form.
///
/// The classical scheme works with staggered velocities `u(n+1/2)` and
/// reads, with `t = tan(theta/2) B/|B|` and `theta = h|B|/eps`,
///
/// ```text
/// u(n+1/2) = v(n) + v(n) x t + (h/2) F(x(n))
/// x(n+1)   = x(n) + h u(n+1/2)
/// v(n+1) - v(n+1) x t = u(n+1/2) + (h/2) F(x(n+1))
/// ```
///
/// where `v(n)` is the average of the neighbouring staggered velocities; the
/// first line is the initialization half-step. The last line is the Boris
/// rotation solved in closed form. With `F = 0` the velocity turns by exactly
/// `theta`; with `B = 0` the step is velocity Verlet.
pub fn boris_step<P: Potential + ?Sized>(s: &State, field: Vec3, eps: f64, h: f64, p: &P) -> Result<State> {
    let rot = boris_vector(field, eps, h);
    let half = 0.5 * h;
    let u = s.v + s.v.cross(&rot) + p.force(s.x)?.scale(half);
    let x = s.x + u.scale(h);
    let w = u + p.force(x)?.scale(half);
    let v = (w + w.cross(&rot) + rot.scale(w.dot(&rot))).scale(1.0 / (1.0 + rot.norm_squared()));
    let next = State::new(s.t + h, x, v);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite { what: "Boris step" })
    }
}

fn boris_vector(field: Vec3, eps: f64, h: f64) -> Vec3 {
    let b = field.norm();
    if b == 0.0 {
        return Vec3::ZERO;
    }
    let theta = h * b / eps;
    field.scale((0.5 * theta).tan() / b)
}

fn rhs<P: Potential + ?Sized>(x: Vec3, v: Vec3, field: Vec3, inv_eps: f64, p: &P) -> Result<(Vec3, Vec3)> {
    Ok((v, v.cross(&field).scale(inv_eps) + p.force(x)?))
}

/// One classical fourth-order Runge-Kutta step of the first-order system.
pub fn rk4_step<P: Potential + ?Sized>(s: &State, field: Vec3, eps: f64, h: f64, p: &P) -> Result<State> {
    let k = 1.0 / eps;
    let (k1x, k1v) = rhs(s.x, s.v, field, k, p)?;
    let (k2x, k2v) = rhs(s.x.axpy(0.5 * h, &k1x), s.v.axpy(0.5 * h, &k1v), field, k, p)?;
    let (k3x, k3v) = rhs(s.x.axpy(0.5 * h, &k2x), s.v.axpy(0.5 * h, &k2v), field, k, p)?;
    let (k4x, k4v) = rhs(s.x.axpy(h, &k3x), s.v.axpy(h, &k3v), field, k, p)?;
    let sixth = h / 6.0;
    let x = s.x + (k1x + (k2x + k3x).scale(2.0) + k4x).scale(sixth);
    let v = s.v + (k1v + (k2v + k3v).scale(2.0) + k4v).scale(sixth);
    Ok(State::new(s.t + h, x, v))
}

/// Reference solution at `t_end` from uniform RK4 steps of at most `h_ref`.
///
/// The step must resolve the gyration: `h_ref |B| / eps <= 0.05`.
pub fn rk4_reference<P: Potential + ?Sized>(
    s: &State,
    field: Vec3,
    eps: f64,
    p: &P,
    t_end: f64,
    h_ref: f64,
) -> Result<State> {
    if !(h_ref.is_finite() && h_ref > 0.0) {
        return Err(Error::InvalidParameter {
            name: "h_ref",
            reason: format!("must be positive, got {h_ref}"),
        });
    }
    let gyration = h_ref * field.norm() / eps;
    if gyration.is_nan() || gyration > REFERENCE_MAX_GYRATION {
        return Err(Error::ResolutionError {
            gyration,
            limit: REFERENCE_MAX_GYRATION,
        });
    }
    let span = t_end - s.t;
    if span.is_nan() || span < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: "must not precede the initial time".into(),
        });
    }
    let steps = (span / h_ref).ceil() as usize;
    if steps == 0 {
        return Ok(*s);
    }
    let h = span / steps as f64;
    let mut state = *s;
    for k in 1..=steps {
        state = rk4_step(&state, field, eps, h, p).map_err(|e| Error::StepFailed {
            step: k,
            t: state.t,
            source: Box::new(e),
        })?;
        state.t = if k == steps { t_end } else { s.t + k as f64 * h };
    }
    Ok(state)
}

/// Time-stepping scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Eep,
    Boris,
    Rk4,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Eep => "eep",
            Method::Boris => "boris",
            Method::Rk4 => "rk4",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eep" => Ok(Method::Eep),
            "boris" => Ok(Method::Boris),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::InvalidParameter {
                name: "method",
                reason: format!("unknown method `{other}` (expected eep, boris or rk4)"),
            }),
        }
    }
}

/// A configured fixed-step integrator for one field, scaling and potential.
#[derive(Clone, Debug)]
pub struct Propagator<P> {
    method: Method,
    field: Vec3,
    eps: f64,
    h: f64,
    potential: P,
    rule: GaussRule,
    fp: FpSettings,
    rotor: Rotor,
}

impl<P: Potential> Propagator<P> {
    pub fn new(method: Method, field: Vec3, eps: f64, h: f64, potential: P) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("must be finite and positive, got {h}"),
            });
        }
        let rotor = Rotor::new(field, h, eps)?;
        Ok(Propagator {
            method,
            field,
            eps,
            h,
            potential,
            rule: GaussRule::default(),
            fp: FpSettings::default(),
            rotor,
        })
    }

    pub fn with_rule(mut self, rule: GaussRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_fp(mut self, fp: FpSettings) -> Result<Self> {
        fp.validate()?;
        self.fp = fp;
        Ok(self)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn rotor(&self) -> &Rotor {
        &self.rotor
    }

    pub fn potential(&self) -> &P {
        &self.potential
    }

    pub fn step(&self, s: &State) -> Result<StepReport> {
        match self.method {
            Method::Eep => eep_step(s, &self.rotor, &self.potential, &self.rule, &self.fp),
            Method::Boris => boris_step(s, self.field, self.eps, self.h, &self.potential).map(StepReport::explicit),
            Method::Rk4 => rk4_step(s, self.field, self.eps, self.h, &self.potential).map(StepReport::explicit),
        }
    }

    /// Number of steps from `t0` to `t_end`: `round((t_end - t0) / h)`.
    pub fn step_count(&self, t0: f64, t_end: f64) -> Result<usize> {
        let span = t_end - t0;
        if !(span.is_finite() && span >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("must be finite and not before the initial time {t0}, got {t_end}"),
            });
        }
        Ok((span / self.h).round() as usize)
    }

    /// Every step from `s0` to `t_end`, starting with `s0` itself as step 0.
    pub fn steps(&self, s0: State, t_end: f64) -> Result<Steps<'_, P>> {
        if !s0.is_finite() {
            return Err(Error::NonFinite { what: "initial state" });
        }
        let total = self.step_count(s0.t, t_end)?;
        Ok(Steps {
            propagator: self,
            t0: s0.t,
            t_end,
            total,
            next: 0,
            current: s0,
            done: false,
        })
    }

    /// Every `sample_every`-th step plus the final one.
    pub fn integrate(
        &self,
        s0: State,
        t_end: f64,
        sample_every: usize,
    ) -> Result<impl Iterator<Item = Result<Sample>> + '_> {
        if sample_every == 0 {
            return Err(Error::InvalidParameter {
                name: "sample_every",
                reason: "must be at least 1".into(),
            });
        }
        let steps = self.steps(s0, t_end)?;
        let total = steps.total();
        Ok(steps.filter(move |item| match item {
            Ok(sample) => sample.step % sample_every == 0 || sample.step == total,
            Err(_) => true,
        }))
    }
}

/// A step index with its report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub step: usize,
    pub report: StepReport,
}

/// Iterator over all steps of a run; stops after the first error.
pub struct Steps<'a, P> {
    propagator: &'a Propagator<P>,
    t0: f64,
    t_end: f64,
    total: usize,
    next: usize,
    current: State,
    done: bool,
}

impl<P> Steps<'_, P> {
    /// Number of steps after the initial state.
    pub fn total(&self) -> usize {
        self.total
    }
}

impl<P: Potential> Iterator for Steps<'_, P> {
    type Item = Result<Sample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.next == 0 {
            self.next = 1;
            self.done = self.total == 0;
            return Some(Ok(Sample {
                step: 0,
                report: StepReport::explicit(self.current),
            }));
        }
        let step = self.next;
        match self.propagator.step(&self.current) {
            Ok(mut report) => {
                // Times sit on the grid t0 + k h; the last one snaps to t_end.
                report.state.t = if step == self.total {
                    self.t_end
                } else {
                    self.t0 + step as f64 * self.propagator.h
                };
                self.current = report.state;
                self.next += 1;
                self.done = step == self.total;
                Some(Ok(Sample { step, report }))
            }
            Err(e) => {
                self.done = true;
                Some(Err(Error::StepFailed {
                    step,
                    t: self.current.t,
                    source: Box::new(e),
                }))
            }
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        if self.done {
            (0, Some(0))
        } else {
            (0, Some(self.total + 1 - self.next))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{AxialInverse, Quadratic, Uniform};

    const AXIS: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    fn reference_state() -> State {
        State::new(0.0, Vec3::new(0.7, 1.0, 0.1), Vec3::new(0.9, 0.5, 0.4))
    }

    fn energy<P: Potential>(p: &P, s: &State) -> f64 {
        0.5 * s.v.norm_squared() + p.value(s.x).unwrap()
    }

    #[test]
    fn eep_without_force_is_exact_gyration() {
        let rotor = Rotor::new(AXIS, 0.05, 0.01).unwrap();
        let s = reference_state();
        let r = eep_step(
            &s,
            &rotor,
            &Uniform::zero(),
            &GaussRule::default(),
            &FpSettings::default(),
        )
        .unwrap();
        assert_eq!(r.state.x, s.x + (*rotor.phi1_a() * s.v).scale(0.05));
        assert_eq!(r.state.v, *rotor.exp_a() * s.v);
        assert!((r.state.v.norm() - s.v.norm()).abs() <= 1e-15);
        assert_eq!(r.fp_iters, 1);
        assert_eq!(r.fp_residual, 0.0);
    }

    #[test]
    fn eep_conserves_energy_for_linear_forces() {
        let p = Quadratic::isotropic(1.0).unwrap();
        let rotor = Rotor::new(AXIS, 0.01, 1.0).unwrap();
        let s = State::new(0.0, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        let r = eep_step(&s, &rotor, &p, &GaussRule::default(), &FpSettings::default()).unwrap();
        assert!((energy(&p, &r.state) - energy(&p, &s)).abs() <= 1e-14);
        assert!(r.fp_residual <= 8.0 * f64::EPSILON);
    }

    #[test]
    fn eep_backward_step_undoes_forward_step() {
        let p = AxialInverse::default();
        let rule = GaussRule::default();
        let fp = FpSettings::default();
        let s = reference_state();
        let fwd = eep_step(&s, &Rotor::new(AXIS, 0.05, 0.01).unwrap(), &p, &rule, &fp).unwrap();
        let back = eep_step(&fwd.state, &Rotor::new(AXIS, -0.05, 0.01).unwrap(), &p, &rule, &fp).unwrap();
        assert!(back.state.phase_distance(&s) <= 1e-10);
        assert!(back.state.t.abs() < 1e-15);
    }

    #[test]
    fn eep_reports_divergence() {
        // A stiff repulsive quadratic potential with a huge step cannot contract.
        let p = Quadratic::isotropic(-1e4).unwrap();
        let rotor = Rotor::new(AXIS, 1.0, 1.0).unwrap();
        let fp = FpSettings {
            tol: 1e-16,
            max_iter: 5,
        };
        let r = eep_step(&reference_state(), &rotor, &p, &GaussRule::default(), &fp);
        assert!(
            matches!(r, Err(Error::FixedPointDiverged { iterations: 5, .. })),
            "{r:?}"
        );
    }

    #[test]
    fn boris_without_force_rotates_exactly() {
        let s = reference_state();
        for (h, eps) in [(0.01, 0.0001), (0.01, 0.01), (0.3, 1.0)] {
            let field = Vec3::new(0.2, -0.1, 1.0);
            let next = boris_step(&s, field, eps, h, &Uniform::zero()).unwrap();
            let rotor = Rotor::new(field, h, eps).unwrap();
            assert!((next.v - *rotor.exp_a() * s.v).max_abs() <= 1e-13);
            assert!((next.v.norm() - s.v.norm()).abs() <= 1e-14);
        }
    }

    #[test]
    fn boris_without_field_is_velocity_verlet() {
        let p = AxialInverse::default();
        let s = reference_state();
        let h = 0.1;
        let next = boris_step(&s, Vec3::ZERO, 0.01, h, &p).unwrap();
        let f0 = p.force(s.x).unwrap();
        let x1 = s.x + s.v.scale(h) + f0.scale(0.5 * h * h);
        let v1 = s.v + (f0 + p.force(x1).unwrap()).scale(0.5 * h);
        assert!((next.x - x1).max_abs() <= 1e-15);
        assert!((next.v - v1).max_abs() <= 1e-15);
    }

    #[test]
    fn boris_is_time_reversible() {
        let p = AxialInverse::default();
        let s = reference_state();
        let fwd = boris_step(&s, AXIS, 0.01, 0.02, &p).unwrap();
        let back = boris_step(&fwd, AXIS, 0.01, -0.02, &p).unwrap();
        assert!(back.phase_distance(&s) <= 1e-13);
    }

    #[test]
    fn rk4_preserves_speed_without_force() {
        let s = reference_state();
        let end = rk4_reference(&s, AXIS, 1.0, &Uniform::zero(), 10.0, 0.01).unwrap();
        assert!((end.v.norm() - s.v.norm()).abs() <= 1e-10);
        assert_eq!(end.t, 10.0);
    }

    #[test]
    fn rk4_rejects_unresolved_gyration() {
        let r = rk4_reference(&reference_state(), AXIS, 0.05, &Uniform::zero(), 1.0, 0.01);
        assert!(matches!(r, Err(Error::ResolutionError { .. })));
    }

    #[test]
    fn zero_length_run_emits_initial_state_only() {
        let prop = Propagator::new(Method::Eep, AXIS, 0.01, 0.01, AxialInverse::default()).unwrap();
        let out: Vec<_> = prop
            .integrate(reference_state(), 0.0, 1)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].report.state, reference_state());
    }

    #[test]
    fn sampling_keeps_every_kth_and_the_last_step() {
        let prop = Propagator::new(Method::Boris, AXIS, 0.01, 0.01, AxialInverse::default()).unwrap();
        let steps: Vec<usize> = prop
            .integrate(reference_state(), 0.105, 4)
            .unwrap()
            .map(|s| s.unwrap().step)
            .collect();
        // round(0.105 / 0.01) = 11 (ties away from zero; 10.5 rounds up)
        assert_eq!(steps, vec![0, 4, 8, 11]);
        let last = prop
            .integrate(reference_state(), 0.105, 4)
            .unwrap()
            .last()
            .unwrap()
            .unwrap();
        assert_eq!(last.report.state.t, 0.105);
    }

    struct HalfSpace;

    impl Potential for HalfSpace {
        fn value(&self, x: Vec3) -> Result<f64> {
            self.force(x).map(|_| 0.0)
        }
        fn force(&self, x: Vec3) -> Result<Vec3> {
            if x[0] < 0.0 {
                Err(Error::SingularPoint { x })
            } else {
                Ok(Vec3::ZERO)
            }
        }
    }

    #[test]
    fn failures_carry_step_index() {
        let s = State::new(0.0, Vec3::new(0.0625, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0));
        let prop = Propagator::new(Method::Boris, Vec3::new(1.0, 0.0, 0.0), 1.0, 0.015625, HalfSpace).unwrap();
        let results: Vec<_> = prop.steps(s, 1.0).unwrap().collect();
        // x reaches 0 after four steps and leaves the domain in the fifth.
        assert_eq!(results.len(), 6);
        match results.last().unwrap() {
            Err(Error::StepFailed { step: 5, t, source }) => {
                assert_eq!(*t, 0.0625);
                assert!(matches!(**source, Error::SingularPoint { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Eep, Method::Boris, Method::Rk4] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("verlet".parse::<Method>().is_err());
    }
}
