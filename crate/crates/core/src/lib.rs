//! Evolvability-signature workbench for hexapod locomotion controllers.
//!
//! The crate is `no_std` (with `alloc`) and holds every algorithmic piece:
//! CPPN genomes, the coupled-oscillator CPG, the five controller decodings,
//! a quasi-static kinematic hexapod, gait-diversity measures, NSGA-II and the
//! signature/KDE machinery. IO, CLI and parallel evaluation live in the
//! `hexevo` crate, which plugs into [`evolution::BatchEvaluator`].

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod controllers;
pub mod cpg;
pub mod cppn;
pub mod diversity;
mod error;
pub mod evolution;
pub mod genome;
pub mod legs;
pub mod math;
pub mod rng;
pub mod signature;
pub mod simulator;

pub use error::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;
