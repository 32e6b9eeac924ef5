//! Multiparameter quantum estimation of the couplings in a driven
//! cavity-magnon-phonon system.
//!
//! The stack runs bottom-up: [`linalg`] helpers, [`gaussian`] state algebra,
//! the [`magnomech`] steady-state model, [`estimation`] bounds, and [`sweep`]
//! for parameter scans.

pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod estimation;
pub mod magnomech;
mod plot;
pub mod sweep;

pub use error::{Error, Result};
pub use gaussian::GaussianState;
