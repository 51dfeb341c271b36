//! Non-backtracking random walks on dynamically rewired configuration-model
//! multigraphs.
//!
//! The crate is `no_std` + `alloc`. With the `parallel` feature (default),
//! Monte Carlo estimators fan replicas out over rayon; results are bitwise
//! identical to the sequential path because every replica owns a counter-based
//! RNG stream derived from `(seed, replica)`.
//!
//! Module map:
//!
//! * [`graph`] half-edge universe, configurations, degree sequences, degree
//!   statistics and regularity checks.
//! * [`walk`] the non-backtracking kernel, exact propagation, static TV curves
//!   and the jump-hazard modified walk.
//! * [`dynamics`] rewiring engines and the joint (walk, graph) chain.
//! * [`estimators`] Monte Carlo tail and TV estimators, short-cut auditing and
//!   the static/dynamic link check.
//! * [`theory`] closed-form limits and profiles.
//! * [`exact`] exhaustive small-instance matrices and oracles.
#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod graph;
pub mod rng;
pub mod theory;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{Configuration, HalfEdgeSpace};

/// Index of a half-edge in `[0, |H|)`.
pub type HalfEdge = usize;
