//! Dynamics of a suspension bridge whose cables can go slack.
//!
//! The deck is an elastic beam with a torsional degree of freedom, hung from
//! two parabolic cables through a continuum of inextensible hangers. Hangers
//! pull but cannot push, so the effective cable shape at any instant is the
//! greatest convex minorant (lower convex envelope) of the hanger-constraint
//! profile. This crate provides:
//!
//! - [`envelope`]: convex envelopes of grid functions, the contact set and
//!   its affine intervals, and a slope-projection operator built on them.
//! - [`variation`]: one-sided variation fields of the envelope-composed
//!   energy terms, and directional-difference quotients used to probe
//!   (non-)differentiability.
//! - [`bridge_model`]: physical parameters, cable geometry, restoring force
//!   density, and energy bookkeeping.
//! - [`dynamics`]: modal Galerkin reduction and explicit time integration.
//! - [`experiments`]: torsional-instability threshold searches and sweeps.
//! - [`validation`]: deterministic randomized check suites shared by the
//!   test suite and the `catena validate` subcommand.

pub mod bridge_model;
pub mod dynamics;
pub mod envelope;
pub mod experiments;
pub mod validation;
pub mod variation;

mod fastmath;

use thiserror::Error;

/// Errors produced by model construction and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid function was malformed (too few samples, non-finite values,
    /// or a degenerate interval).
    #[error("invalid grid function: {0}")]
    InvalidGrid(String),

    /// A parameter set violated a physical invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation requiring the no-flat property was applied to a
    /// configuration with a flat (multi-cell, fully contacting) chord.
    #[error("flat chord over cells [{start}, {end}]: {context}")]
    FlatChord {
        /// First cell index covered by the offending chord.
        start: usize,
        /// One past the last cell index covered by the offending chord.
        end: usize,
        /// What was being attempted.
        context: String,
    },

    /// The integrator produced a non-finite state.
    #[error("non-finite state at t = {t}: {diagnostic}")]
    NonFinite {
        /// Simulation time at which the first non-finite value appeared.
        t: f64,
        /// Dump of the offending state for post-mortem analysis.
        diagnostic: String,
    },

    /// A configuration value was out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An experiment protocol step failed (no bracket found, or a bracket
    /// end flipped classification on re-verification).
    #[error("experiment protocol: {0}")]
    Protocol(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Fixes the number of worker threads used by parallel sweeps.
///
/// Call at most once, before any parallel work starts. Without the
/// `parallel` feature this is a no-op: everything runs sequentially.
///
/// # Errors
///
/// [`Error::InvalidConfig`] when `n` is zero or a pool is already running.
#[cfg(feature = "parallel")]
pub fn configure_workers(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("worker count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

/// Sequential build: the worker count is accepted (if positive) and ignored.
#[cfg(not(feature = "parallel"))]
pub fn configure_workers(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("worker count must be positive".into()));
    }
    Ok(())
}
