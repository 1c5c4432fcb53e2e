//! Finite-scale estimators of topological and measure-theoretic pressures for
//! nonautonomous dynamical systems on finite metric spaces.
//!
//! A system is a finite metric space `(X, d)`, a sequence of self-maps
//! `f_1, f_2, ...` acting on point indices and a potential `φ`. The crate
//! computes cover and packing functionals over Bowen balls, locates their
//! critical values and checks the inequalities that relate the resulting
//! pressures.

pub mod cover;
pub mod emit;
pub mod error;
pub mod measure;
pub mod numeric;
pub mod oracle;
pub mod par;
pub mod pressure;
pub mod space;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
