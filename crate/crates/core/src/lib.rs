//! Simulation toolkit for pulsed-drive cavity optomechanics.
//!
//! A single cavity mode couples to a mechanical mode through radiation
//! pressure while two trains of Gaussian pulses drive the cavity. With the
//! coupling tuned to `g_2` and the pulses in counterintuitive order, the system
//! performs adiabatic passage `|0,0> -> |0,2>` through a dark state, and the
//! mechanical decay releases the two phonons as a correlated pair.
//!
//! Units: all frequencies and rates are angular and are conventionally given
//! in units of the mechanical frequency (`omega_m = 1`); times are in `1/omega_m`.

pub mod error;
pub mod fockspace;
pub mod dynamics;
pub mod model;
pub mod observables;

pub use error::{Error, Result};
pub use num_complex::Complex64;
