//! Pseudo-spectral simulation of the 2D Boussinesq system with
//! temperature-dependent viscosity and thermal diffusivity on the periodic
//! free-slip channel `T_x x (0, 1)`, together with diagnostics that check the
//! system's a priori estimates numerically.

pub mod coefficients;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial;
pub mod io;
pub mod inequality;
pub mod mms;
pub mod quadrature;
pub mod scenarios;
pub mod stepper;
mod transform;

pub use coefficients::CoefficientModel;
pub use dynamics::{leray_project, recover_pressure, rhs, PressureField, State, Tendency};
pub use error::{Error, Result};
pub use field::{RealField, SpectralField};
pub use grid::{Grid, Parity};
