pub mod approx;
pub mod check;
pub mod config;
pub mod eigen;
pub mod error;
pub mod factorize;
pub mod field;
pub mod grid;
pub mod hamiltonian;
pub mod model;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
