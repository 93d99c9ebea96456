//! Shared fixtures for the benchmarks.

use eep_core::{State, Vec3};

pub fn paper_state() -> State {
    State::new(0.0, Vec3::new(0.7, 1.0, 0.1), Vec3::new(0.9, 0.5, 0.4))
}

pub fn unit_z() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}
