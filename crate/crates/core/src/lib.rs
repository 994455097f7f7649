//! Higher-order Poisson kernels, polyharmonic fundamental solutions and the
//! flat-triangle integrals needed to discretize their layer potentials.
//!
//! Everything here is allocation-light and runs without `std`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod kernels;
pub mod math;
pub mod panel;
pub mod quadrature;
pub mod special;

pub use error::KernelError;
pub use kernels::{DomainMode, KernelConstants, KernelSpec};
pub use special::{gegenbauer_p, gegenbauer_q, UltrasphericalQuery};
