//! Sub-task latent machinery.
//!
//! A sub-task code is a K-way categorical latent attached to every time
//! step. The posterior network infers the current code from the previous
//! code, the current state, and the previous action (the Markov form; no
//! recurrent nets). It is pretrained as the encoder of a variational
//! auto-encoder whose decoder is the policy, then frozen: afterwards it
//! pseudo-labels expert demonstrations and pays the policy a
//! directed-information bonus `log Q(c_t | c_{t-1}, s_t, a_{t-1})`.

mod code;
mod gumbel;
mod posterior;
mod segmentation;
mod vae;

pub use code::SubTaskCode;
pub use gumbel::{gumbel_softmax_sample, gumbel_softmax_with_noise, sample_gumbel_noise, GumbelSample};
pub use posterior::{
    posterior_bonus, posterior_input, posterior_logits, posterior_spec, pseudo_label, LabelMode,
};
pub use segmentation::segmentation_accuracy;
pub use vae::{pretrain_posterior_vae, vae_minibatch_loss, VaeConfig, VaeTrace};

/// Convention for the code preceding the first step of every episode:
/// index 0, hard.
pub fn initial_code(k: usize) -> SubTaskCode {
    SubTaskCode::one_hot(0, k)
}
