//! Structural analysis of finite partially observed Markov decision processes.
//!
//! The crate answers one question for a concrete POMDP: does the myopic policy
//! `argmax_u r_u'π` lower-bound the optimal policy? It provides
//!
//! - [`model`]: model data, Bayesian belief propagation and reward shifts,
//! - [`orders`]: MLR / first-order dominance, TP2, copositive dominance,
//!   Lehmann precision, boundary conditions and Blackwell factorizations,
//! - [`lp`]: the small dense simplex kernel behind the factorization and
//!   pruning tests,
//! - [`solver`]: exact alpha-vector and grid value iteration, Q-values and
//!   policies,
//! - [`structural`]: the assumption pipeline and the empirical verification
//!   harness that ties verdicts to solved value functions,
//! - [`fixtures`]: generators for the standard example models.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and the
//! command-line driver live in the `myopic` companion crate.
//!
//! All indices (states, observations, actions) are zero-based.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod fixtures;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod orders;
pub mod solver;
pub mod structural;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{Belief, LineCoordinates, PomdpModel, Transition};
