//! Monotone dual block-coordinate ascent for Lagrangean decompositions of
//! combinatorial problems whose subproblems are sets of binary vectors.
//!
//! The [`graph`] module holds the decomposition, [`engine`] the update step
//! and iteration scheduler. Problem plugins: [`mrf`] (pairwise CRF MAP
//! inference), [`matching`] (graph matching) and [`multicut`].

pub mod baselines;
pub mod batch;
pub mod cli;
pub mod engine;
pub mod error;
pub mod gen;
pub mod graph;
pub mod io;
pub mod matching;
pub mod mrf;
pub mod multicut;
pub mod solve;

pub use error::{Error, Result};
