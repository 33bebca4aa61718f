//! Fixtures shared by the criterion benches.

use boussinesq_ist::potentials::{builtin_bump, InitialData};
use boussinesq_ist::C64;

pub fn bump() -> InitialData {
    builtin_bump()
}

/// A point inside D₁ away from the rays.
pub fn k_interior() -> C64 {
    C64::from_polar(1.2, 0.4)
}
