//! Adversarially robust random sampling over data streams.
//!
//! The crate models a two-player game: a sampler (Bernoulli or reservoir)
//! consumes a stream one element at a time while an adversary, observing the
//! sampler's state after every round, chooses the next element. The final
//! (or every intermediate) sample is judged exactly, in rational arithmetic,
//! against the realized stream: is it an eps-approximation for a chosen
//! range family?
//!
//! Modules:
//! - [`core_sampling`]: the sampler state machines.
//! - [`set_systems`]: range families, exact densities, and the
//!   eps-approximation verifier.
//! - [`adversaries`]: the binary-search attack and static baselines.
//! - [`game_engine`]: game orchestration and Monte Carlo estimation.
//! - [`param_advisor`]: closed-form parameter calculators.
//! - [`applications`]: quantiles, heavy hitters, range queries, centers.
//! - [`cli`]: the `robust-sampler` command-line front end.

pub mod adversaries;
pub mod applications;
pub mod cli;
pub mod core_sampling;
pub mod element;
pub mod error;
pub mod game_engine;
pub mod numeric;
pub mod param_advisor;
pub mod rng;
pub mod set_systems;

pub use element::{Element, Stream};
pub use error::{Error, Result};
