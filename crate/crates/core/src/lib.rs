//! Numerical solver and diagnostics for quasilinear parabolic equations
//! `du/dt - div(a(t, x, u) grad u) = 0` on a periodic box.

pub mod error;
pub mod field;
pub mod heat;
pub mod linear;
pub mod norms;
pub mod harness;
pub mod quasilinear;

pub use error::{Error, Result};
