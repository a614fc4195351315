//! Numerical laboratory for the heat equation with superlinear radiation
//! `∂u/∂n = u^q` imposed on a boundary patch that shrinks in time.
//!
//! The crate is organised by subsystem:
//!
//! - [`geometry`]: domains, boundary patches and shrinking schedules.
//! - [`kernel`]: free and Neumann heat kernels, boundary-time integrals,
//!   constant calibration and the representation-formula oracle.
//! - [`solver`]: finite-volume / ghost-node solver with blowup detection and
//!   lifespan estimation.
//! - [`schedule`]: decay-schedule constant pipelines for global existence and
//!   temperature capping.
//! - [`seqlab`]: finite-`J` probes of the growth-rate sequence lemma.
//! - [`harness`]: scenario configuration, sweeps, reports, acceptance checks
//!   and the command line front end.
//!
//! Data-parallel loops go through [`exec::Execution`], which uses rayon when
//! the `parallel` feature is enabled and falls back to sequential iteration
//! otherwise.

pub mod error;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod kernel;
pub mod numeric;
pub mod schedule;
pub mod seqlab;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Execution;
