//! Desk-scale laboratory for first passage percolation over correlated
//! random environments and for random conductance models with killing.
//!
//! Modules follow the pipeline of an experiment: [`lattice`] geometry,
//! [`environments`] samplers and weight maps, [`fpp`] distances and
//! estimators, [`rcm`] conductance models, [`analysis`] statistics and
//! the [`runner`] that binds them to configs and output files.

pub mod analysis;
pub mod environments;
pub mod error;
pub mod fpp;
pub mod lattice;
pub mod rcm;
pub mod rng;
pub mod runner;
pub mod snapshot;
pub mod solver;

pub use error::{Error, Result};
