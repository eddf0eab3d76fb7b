//! Adversarial inverse reinforcement learning from unlabeled multi-task
//! demonstrations.
//!
//! Five small networks — a hierarchical policy, a multi-task reward, a
//! situational potential, an inverse model, and a sub-task posterior — are
//! trained against each other so that both a transferable reward function
//! and a sub-task-aware policy fall out of raw expert trajectories. The
//! crate also ships exact tabular oracles (mutual information, EM on the
//! variational bound, value iteration) that pin the continuous machinery
//! to closed-form ground truth.
//!
//! Start with [`nn`] for the differentiable substrate, [`envs`] for the
//! toy multi-task environments, and [`trainer`] for the end-to-end loop.
//! The `book/` directory of the repository walks through the concepts
//! chapter by chapter; its code snippets run as doc-tests.

pub mod adversarial;
pub mod config;
pub mod empowerment;
pub mod envs;
pub mod latent;
pub mod nn;
pub mod rng;
pub mod trainer;
pub mod verify;

mod error;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide;
