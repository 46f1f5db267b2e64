//! Continuous-time quantum and classical walks on the p-adic ball hierarchy.
//!
//! The state space T^(p)_M is the set of p^M balls of radius p^-M tiling the
//! p-adic integers; the Hamiltonian couples two balls by a rate depending
//! only on the level where their indices first disagree. That hierarchical
//! symmetry makes everything here O(M) instead of O(p^M):
//!
//! - [`space`] — sites, separation levels, the ultrametric, level classes;
//! - [`hamiltonian`] — coupling landscapes, the dense matrix (oracle only),
//!   and the closed-form spectrum with multiplicities;
//! - [`quantum`] — amplitudes and probabilities by class, exact rational
//!   time averages, infinite-depth limits, mean distance: the walk
//!   localizes at every distance scale;
//! - [`classical`] — the CTMC with the same spectrum: relaxation to the
//!   uniform distribution and the three decay-law fits (power, stretched
//!   exponential, logarithmic) — no classical localization;
//! - [`graphs`] — cycle, line, hypercube, and complete-graph walks for the
//!   comparison taxonomy;
//! - [`bessel`] — J_n for the integer-line walk;
//! - [`table`] — flat output records shared by the CLI and tests.
//!
//! Dense matrices appear only in verification oracles and are capped (see
//! [`hamiltonian::DEFAULT_DENSE_CAP`]); every production path works on M+1
//! class values.

pub mod bessel;
pub mod classical;
pub mod error;
pub mod graphs;
pub mod hamiltonian;
pub mod quantum;
pub mod space;
pub mod table;

pub use error::{Error, Result};
