//! Asymptotic-preserving exponential Runge-Kutta solver for the spatially
//! inhomogeneous quantum (Bose-Einstein / Fermi-Dirac) Boltzmann equation in
//! one space and two velocity dimensions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod collision;
pub mod error;
pub mod euler;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod integrator;
pub mod phase_space;
pub mod statistics;
pub mod tableau;
pub mod transport;

pub use error::{Error, Result};
