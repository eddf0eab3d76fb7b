//! Differentiable function-approximator core.
//!
//! Small fully connected networks over `f64`, with a recorded evaluation
//! tape for exact reverse-accumulation gradients, distribution heads for
//! discrete and Gaussian action spaces, an Adam optimizer, and a text
//! checkpoint format. This is the substrate under all five learned models;
//! everything else in the crate differentiates by composing these pieces.

mod adam;
mod checkpoint;
mod gradcheck;
pub mod heads;
mod mlp;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::Checkpoint;
pub use gradcheck::{grad_check, relative_error};
pub use mlp::{
    Activation, MlpSpec, Network, OutputHead, Params, Tape, LOG_STD_MAX, LOG_STD_MIN,
};

/// Floor applied to log-probabilities before they enter a loss, so that
/// near-zero densities early in training cannot blow a squared target up.
/// Gradients are cut below the floor, matching a clamp.
pub const LOG_PROB_FLOOR: f64 = -30.0;

/// Clamp a log-probability at [`LOG_PROB_FLOOR`].
pub fn floor_log_prob(lp: f64) -> f64 {
    lp.max(LOG_PROB_FLOOR)
}
