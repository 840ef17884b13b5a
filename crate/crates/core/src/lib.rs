//! Numerical toolkit for periodic waves of the Lugiato-Lefever equation:
//! steady-profile solves, Floquet-Bloch spectral stability, semigroup
//! decomposition, time integration, and phase-modulation diagnostics.

pub mod bloch;
pub mod critical;
pub mod eig;
pub mod error;
pub mod fft;
pub mod field;
pub mod io;
pub mod dynamics;
pub mod modulation;
pub mod profile;
pub mod semigroup;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
