//! Surrogate-assisted synthesis of free-form planar antenna topologies.
//!
//! The crate covers the whole design flow for a point-swarm patch antenna:
//!
//! * [`geometry`]: the `2L + 3` design vector, layout construction, bounds.
//! * [`simbackend`]: the variable-fidelity simulation interface, the built-in
//!   mock resonator model and tabulated curves.
//! * [`scaling`]: the frequency-scaling surrogate `alpha(c)`.
//! * [`classifier`]: scale-optimizing screening of random candidates and the
//!   persistent design database used for warm starts.
//! * [`troptim`]: the trust-region engine and the coarse/fine bi-stage flow.
//! * [`yieldmc`]: Monte Carlo yield estimation (surrogate and direct).
//! * [`baselines`]: the evolutionary and no-scaling reference methods.
//! * [`pipeline`], [`config`], [`export`]: end-to-end orchestration.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod classifier;
pub mod config;
pub mod error;
pub mod export;
pub mod geometry;
pub mod pipeline;
pub mod reference_designs;
pub mod scaling;
pub mod simbackend;
pub mod troptim;
pub mod yieldmc;

pub use error::{Error, Result};
