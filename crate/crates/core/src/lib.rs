//! Maximizing an unknown monotone submodular function under a cardinality
//! constraint when the function can only be observed through noisy queries.
//!
//! The crate is organized bottom-up:
//!
//! - [`function`]: set functions (probabilistic coverage, tabular), validity
//!   checks and the noise-free reference algorithms (greedy, exhaustive
//!   optimum, gap profiles).
//! - [`oracle`]: simulated observation models: value queries with
//!   sub-Gaussian noise and pairwise preference queries under a
//!   Bradley-Terry-Luce model, plus the Borda reduction.
//! - [`topx`]: the adaptive top-l exploration module, written as a resumable
//!   state machine so that observations may come from a simulator or from a
//!   human answering over HTTP.
//! - [`baselines`]: uniform exploration and random selection.
//! - [`expgreedy`]: the greedy outer loop that samples one item per iteration
//!   from the set proposed by the exploration module.
//! - [`harness`]: seeded Monte-Carlo experiments emitting CSV.

pub mod baselines;
pub mod error;
pub mod expgreedy;
pub mod function;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod topx;

pub use error::{Error, Result};
pub use function::{ItemId, SubmodularFunction};
