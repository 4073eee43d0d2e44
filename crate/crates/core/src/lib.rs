//! Quantum transport of an atom in an optical conveyor belt.
//!
//! The crate simulates a single atom carried by a moving sinusoidal lattice,
//! compares analytic transport protocols with numerically optimized ones and
//! evaluates the geometric quantities that bound how fast the transport can
//! be. All quantities are in recoil units unless a name says otherwise; see
//! [`lattice`] for the conventions.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod interferometer;
pub mod lattice;
pub mod optimizer;
mod par;
pub mod protocols;
pub mod thermal;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Grid, GridSpec, WaveFunction};
pub use lattice::{LatticeParams, SpinDownField};
