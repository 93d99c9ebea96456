//! Exponential energy-preserving integration of charged-particle motion
//!
//! ```text
//! x'' = x' x B / eps + F(x),   F = -grad U
//! ```
//!
//! in a strong, constant magnetic field `B`, together with a Boris baseline,
//! an RK4 reference solver and energy / magnetic-moment diagnostics.
//!
//! ```
//! use eep_core::{AxialInverse, Method, Propagator, State, Vec3};
//!
//! let prop = Propagator::new(Method::Eep, Vec3::new(0.0, 0.0, 1.0), 0.01, 0.01, AxialInverse::default())?;
//! let s0 = State::new(0.0, Vec3::new(0.7, 1.0, 0.1), Vec3::new(0.9, 0.5, 0.4));
//! let last = prop.integrate(s0, 1.0, 10)?.last().unwrap()?;
//! assert_eq!(last.step, 100);
//! # Ok::<(), eep_core::Error>(())
//! ```

mod compensated;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod linalg3;
pub mod potential;
pub mod quadrature;
pub mod rotor;

pub use diagnostics::{
    drift_summary, energy, moment, Baseline, DriftAccumulator, DriftSummary, Quantity, SampleRecord,
};
pub use error::{Error, Result};
pub use integrator::{
    boris_step, eep_step, rk4_reference, rk4_step, FpSettings, Method, Propagator, Sample, State, StepReport,
};
pub use linalg3::{Mat3, Vec3};
pub use potential::{AxialInverse, NamedPotential, Potential, Quadratic, Uniform, UserDefined};
pub use quadrature::{averaged_force, GaussRule};
pub use rotor::Rotor;
