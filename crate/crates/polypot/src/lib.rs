//! Polyharmonic boundary-integral solvers on closed triangulated surfaces.
//!
//! Meshes and their file format live in [`geometry`] and [`mesh_io`]; dense
//! boundary operators and volume potentials in [`operators`]; the Dirichlet,
//! Neumann and regularity cascades in [`solvers`]; oracles and experiment
//! runners in [`verify`]; the command-line front end in [`cli`].

pub mod cli;
pub mod error;
pub mod geometry;
pub mod mesh_io;
pub mod operators;
pub mod solvers;
pub mod verify;

pub use error::{PolypotError, Result};
pub use polypot_core as core;
