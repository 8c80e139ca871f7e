//! Voting bloc inference from aggregated referendum returns.
//!
//! Each municipality is assigned to one of `K` latent blocs; within a bloc the
//! yes/no split for every question follows a Beta-binomial law. The number of
//! blocs is itself inferred with a continuous-time birth-death process that is
//! interleaved with fixed-`K` Gibbs/Metropolis sweeps over the assignments, the
//! mixture weights and the Beta-binomial parameters.
//!
//! The crate is `no_std` (it needs `alloc`). All randomness is drawn from a
//! caller-supplied [`rand::Rng`], so every routine is reproducible from a seed.
//! File formats, the command line and thread orchestration live in the
//! `bloc-infer` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod analysis;
pub mod bdmcmc;
mod cache;
pub mod diagnostics;
mod error;
pub mod math;
pub mod model;
pub mod random;
pub mod sampler;
pub mod simulation;

pub use crate::bdmcmc::{
    bd_process, birth_move, death_move, death_rate, posterior_k, run_chain, BdEvent, BdOutcome,
    ChainOutput, PosteriorSample, RunConfig,
};
pub use crate::error::{Error, Result};
pub use crate::model::{
    log_beta_binomial, log_complete_likelihood, log_marginal_mixture, sample_alpha_prior, Alpha,
    AugmentedCounts, Hyperparams, Municipality, ModelState, Question, VoteCount, VoteTable,
};
pub use crate::sampler::{sweep, SamplerSchedule, SweepConfig};
pub use crate::simulation::{simulate_dataset, GroundTruth, SimSpec};
