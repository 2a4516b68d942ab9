//! Numerical laboratory for generalized T,T⁻¹ (Kalikow) skew products.
//!
//! The crate is organised bottom-up:
//!
//! * [`arithmetic`]: continued fractions, Ostrowski digits, small linear forms.
//! * [`torus`]: exact fixed-point torus points and integer matrices.
//! * [`base`]: rotations, hyperbolic automorphisms, Markov shifts, special flows.
//! * [`fiber`]: commuting toral actions, random sceneries, suspension flows.
//! * [`cocycle`]: skewing functions and their Birkhoff sums.
//! * [`skew`]: the skew product itself, observables and occupation measures.
//! * [`stats`]: Monte Carlo experiments and estimators.
//! * [`probe`]: closeness, D-set and good-pair probes.
//!
//! Every Monte Carlo routine takes a master seed and a worker count; results do
//! not depend on the worker count.

pub mod arithmetic;
pub mod base;
pub mod cocycle;
pub mod error;
pub mod fiber;
pub mod parallel;
pub mod probe;
pub mod rng;
pub mod skew;
pub mod stats;
pub mod torus;
pub mod trig;

pub use error::{Error, Result};
