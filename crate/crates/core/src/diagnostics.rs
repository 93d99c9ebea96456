//! Conserved quantities and drift statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::State;
use crate::linalg3::{Mat3, Vec3};
use crate::potential::Potential;

/// Minimum number of samples for a drift fit.
pub const MIN_WINDOW_SAMPLES: usize = 10;

/// Initial values below this are reported as absolute, not relative, errors.
pub const RELATIVE_FLOOR: f64 = 1e-300;

/// `E(x, v) = |v|^2 / 2 + U(x)`.
pub fn energy<P: Potential + ?Sized>(s: &State, p: &P) -> Result<f64> {
    Ok(0.5 * s.v.norm_squared() + p.value(s.x)?)
}

/// Magnetic moment `|skew(B) v|^2 / (2 |B|^3)`, i.e. `|v_perp|^2 / (2|B|)`.
pub fn moment(v: Vec3, field: Vec3) -> Result<f64> {
    let b = field.norm();
    if b == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok((Mat3::skew(field) * v).norm_squared() / (2.0 * b * b * b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Energy,
    Moment,
}

/// Initial values of the conserved quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub energy: f64,
    pub moment: f64,
}

impl Baseline {
    pub fn new<P: Potential + ?Sized>(s: &State, p: &P, field: Vec3) -> Result<Self> {
        Ok(Baseline {
            energy: energy(s, p)?,
            moment: moment(s.v, field)?,
        })
    }

    /// True when errors of `q` are absolute because the initial value vanishes.
    pub fn is_absolute(&self, q: Quantity) -> bool {
        self.initial(q).abs() < RELATIVE_FLOOR
    }

    pub fn initial(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Energy => self.energy,
            Quantity::Moment => self.moment,
        }
    }

    /// `(value - initial) / initial`, or `value - initial` when flagged absolute.
    pub fn relative_error(&self, q: Quantity, value: f64) -> f64 {
        let initial = self.initial(q);
        if self.is_absolute(q) {
            value - initial
        } else {
            (value - initial) / initial
        }
    }
}

/// One diagnostic output row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: f64,
    pub x: Vec3,
    pub v: Vec3,
    pub energy: f64,
    pub moment: f64,
    pub rel_energy_err: f64,
    pub rel_moment_err: f64,
    pub fp_iters: usize,
}

impl SampleRecord {
    pub fn new<P: Potential + ?Sized>(
        s: &State,
        fp_iters: usize,
        p: &P,
        field: Vec3,
        baseline: &Baseline,
    ) -> Result<Self> {
        let e = energy(s, p)?;
        let m = moment(s.v, field)?;
        Ok(SampleRecord {
            t: s.t,
            x: s.x,
            v: s.v,
            energy: e,
            moment: m,
            rel_energy_err: baseline.relative_error(Quantity::Energy, e),
            rel_moment_err: baseline.relative_error(Quantity::Moment, m),
            fp_iters,
        })
    }

    pub fn relative_error(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Energy => self.rel_energy_err,
            Quantity::Moment => self.rel_moment_err,
        }
    }
}

/// Size and trend of a relative-error series over a time window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub max_abs_rel_err: f64,
    /// Least-squares slope of the relative error, per unit time.
    pub fitted_slope: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Streaming version of [`drift_summary`].
///
/// Points outside the closed window are ignored. The fit uses centred
/// running moments, so millions of points at large `t` stay accurate.
#[derive(Clone, Debug)]
pub struct DriftAccumulator {
    window: (f64, f64),
    count: usize,
    mean_t: f64,
    mean_y: f64,
    sum_tt: f64,
    sum_ty: f64,
    max_abs: f64,
}

impl DriftAccumulator {
    pub fn new(window: (f64, f64)) -> Self {
        DriftAccumulator {
            window,
            count: 0,
            mean_t: 0.0,
            mean_y: 0.0,
            sum_tt: 0.0,
            sum_ty: 0.0,
            max_abs: 0.0,
        }
    }

    pub fn push(&mut self, t: f64, y: f64) {
        if t < self.window.0 || t > self.window.1 {
            return;
        }
        self.count += 1;
        let n = self.count as f64;
        let dt = t - self.mean_t;
        self.mean_t += dt / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.sum_tt += dt * (t - self.mean_t);
        self.sum_ty += dt * (y - self.mean_y);
        self.max_abs = self.max_abs.max(y.abs());
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Result<DriftSummary> {
        if self.count < MIN_WINDOW_SAMPLES {
            return Err(Error::EmptyWindow {
                found: self.count,
                required: MIN_WINDOW_SAMPLES,
            });
        }
        let slope = if self.sum_tt > 0.0 {
            self.sum_ty / self.sum_tt
        } else {
            0.0
        };
        Ok(DriftSummary {
            max_abs_rel_err: self.max_abs,
            fitted_slope: slope,
            window: self.window,
            samples: self.count,
        })
    }
}

/// Max absolute relative error and least-squares slope of `q` over `window`.
pub fn drift_summary(series: &[SampleRecord], q: Quantity, window: (f64, f64)) -> Result<DriftSummary> {
    let mut acc = DriftAccumulator::new(window);
    for r in series {
        acc.push(r.t, r.relative_error(q));
    }
    acc.finish()
}
