//! Simulation and verification toolkit for single-measurement-layer
//! preparation of non-Abelian topological order on small tori.

pub mod anyons;
pub mod circuit;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod lattice;
pub mod operator;
pub mod sim;
pub mod stabilizers;

pub use error::{Error, Result};
