//! Direct scattering, k→0 expansions, sectional eigenfunctions and
//! Riemann–Hilbert jump data for the good Boussinesq equation.

pub mod algebra;
pub mod error;
pub mod evolution;
pub mod extrapolate;
pub mod fredholm;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod rh;
pub mod scattering;
pub mod verify;
pub mod zero;

pub use algebra::{Complex3x3, Sector, SpectralPoint, C64, OMEGA, OMEGA2};
pub use error::{Error, Result};
