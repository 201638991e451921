//! Certified-by-design finite-state controller synthesis for quantized
//! plants.
//!
//! The crate builds deterministic finite-state abstractions of monotone 1-D
//! plants with finite sensors and actuators, bounds the abstraction error as a
//! rho/mu gain, synthesizes controllers by minimax value iteration and
//! produces re-checkable certificates. Everything is exact rational
//! arithmetic and `no_std` (with `alloc`).
#![no_std]

extern crate alloc;

pub mod abstraction;
pub mod gain;
pub mod machine;
pub mod plant;
pub mod rational;
pub mod simulate;
pub mod synthesis;

pub use rational::{rat, Gain, Rational};
