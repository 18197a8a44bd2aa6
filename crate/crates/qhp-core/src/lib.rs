//! Probability that a quarter-plane random walk hits the vertical axis
//! before the horizontal one.

pub mod asymptotics;
pub mod error;
pub mod gluing;
pub mod integral;
pub mod kernel;
pub mod method;
pub mod montecarlo;
pub mod oracle;
pub mod poly;
pub mod quadrature;
pub mod walk;

pub use error::{Error, Result};
