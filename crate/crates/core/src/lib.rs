//! Generalized partial Gaussian graphical model.
//!
//! Joint estimation of the direct links `Omega_yx` and the conditional
//! response precision `Omega_yy` under an l1 + structural penalty, with
//! synthetic scenarios, evaluation metrics and the constants of the
//! associated error bound.

pub mod cli;
pub mod error;
pub mod evaluate;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod owlqn;
pub mod simulate;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
