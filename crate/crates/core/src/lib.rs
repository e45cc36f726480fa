//! Dimension and measure computations for H-structures over finite fields.

pub mod config;
pub mod error;
pub mod geometry;
pub mod logic;
pub mod measures;
pub mod model;
pub mod runner;
pub mod semiring;
pub mod asymptotics;

pub use error::{Error, Result};
