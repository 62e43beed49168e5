//! Problem instances, annealing schedules and the rotated-frame coefficients.
//!
//! Spin/bit convention shared by the whole crate: site 0 is the most
//! significant bit of a basis index, and a clear bit is spin `+1`
//! (the `σ^z = +1` eigenstate).

mod config;
mod problem;
mod schedule;

pub use config::{CVector, SpinConfig};
pub use problem::{ferro_problem, sk_problem, IsingProblem, ProblemFile};
pub use schedule::{
    coefficients, rotated_coefficients, rotation_angle, Coefficients, RotatedCoefficients, ScheduleParams,
};

/// Bit position of `site` in a basis index of an `n`-site register.
#[inline]
pub fn site_bit(n: usize, site: usize) -> usize {
    n - 1 - site
}

/// Spin (`±1`) of `site` in basis state `index`.
#[inline]
pub fn spin_of(n: usize, index: usize, site: usize) -> f64 {
    if (index >> site_bit(n, site)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}
