//! Density-matrix simulation of quantum reservoir computers driven either
//! with the full input history after every measurement (quadratic cost) or
//! with a fixed-length window of recent inputs (linear cost), together with
//! the readout, capacity and task tooling needed to compare the two.

pub mod driver;
pub mod encode;
pub mod error;
pub mod experiment;
pub mod ipc;
pub mod qmath;
pub mod readout;
pub mod reservoir;
pub mod tasks;

pub use error::{Error, Result};
