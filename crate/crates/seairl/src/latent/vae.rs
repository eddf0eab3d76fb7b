//! Posterior pretraining as a variational auto-encoder.
//!
//! The posterior encodes each demonstration step into a relaxed code; the
//! policy decodes `(s, c)` back into the expert action. Minimizing
//! reconstruction NLL plus a KL to the uniform categorical prior trains
//! the posterior to segment trajectories and warm-starts the policy.
//! Gradients flow through the Gumbel-softmax samples and through the code
//! chain across time (full backpropagation along the trajectory).

use rand::seq::SliceRandom;
use rand::Rng;

use super::gumbel::{gumbel_softmax_with_noise, sample_gumbel_noise, GumbelSample};
use super::posterior::posterior_input;
use crate::envs::{Action, DemoSet, Trajectory};
use crate::nn::heads::{
    categorical_log_prob, categorical_log_prob_grad, gaussian_log_prob, gaussian_log_prob_grads,
    kl_to_uniform, kl_to_uniform_grad,
};
use crate::nn::{adam_step, AdamHyper, AdamState, Network, Tape, LOG_PROB_FLOOR};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct VaeConfig {
    pub epochs: usize,
    pub lr: f64,
    pub lambda_kl: f64,
    pub temp_start: f64,
    pub temp_end: f64,
    /// Trajectories per optimizer step.
    pub minibatch: usize,
}

impl Default for VaeConfig {
    fn default() -> Self {
        VaeConfig {
            epochs: 300,
            lr: 3e-4,
            lambda_kl: 0.1,
            temp_start: 1.0,
            temp_end: 0.3,
            minibatch: 8,
        }
    }
}

/// Per-epoch averages recorded during pretraining.
#[derive(Debug, Clone, Default)]
pub struct VaeTrace {
    pub loss: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub kl: Vec<f64>,
}

struct StepRecord {
    posterior_tape: Tape,
    logits: Vec<f64>,
    sample: GumbelSample,
    policy_tape: Tape,
    /// d(recon)/d(policy output), already scaled by the batch weight.
    recon_upstream: Vec<f64>,
}

/// Reconstruction NLL for one action under the policy output, with the
/// upstream gradient on the policy output. Log-probabilities below the
/// global floor contribute the floor with zero gradient.
fn reconstruction(action: &Action, policy_out: &[f64], scale: f64) -> (f64, Vec<f64>) {
    match action {
        Action::Discrete(a) => {
            let lp = categorical_log_prob(policy_out, *a);
            if lp < LOG_PROB_FLOOR {
                (-LOG_PROB_FLOOR, vec![0.0; policy_out.len()])
            } else {
                let g = categorical_log_prob_grad(policy_out, *a);
                (-lp, g.into_iter().map(|x| -scale * x).collect())
            }
        }
        Action::Continuous(a) => {
            let d = policy_out.len() / 2;
            let (mean, log_std) = policy_out.split_at(d);
            let lp = gaussian_log_prob(mean, log_std, a);
            if lp < LOG_PROB_FLOOR {
                (-LOG_PROB_FLOOR, vec![0.0; policy_out.len()])
            } else {
                let (dm, ds) = gaussian_log_prob_grads(mean, log_std, a);
                let mut g = Vec::with_capacity(policy_out.len());
                g.extend(dm.into_iter().map(|x| -scale * x));
                g.extend(ds.into_iter().map(|x| -scale * x));
                (-lp, g)
            }
        }
    }
}

/// Loss and gradients for a minibatch of trajectories with pre-drawn
/// Gumbel noise (`noise[i][t]` for trajectory `i`, step `t`). Returns
/// `(loss, recon_mean, kl_mean)` averaged per transition and accumulates
/// scaled gradients into the two buffers.
pub fn vae_minibatch_loss(
    policy: &Network,
    posterior: &Network,
    trajectories: &[&Trajectory],
    noise: &[Vec<Vec<f64>>],
    temperature: f64,
    lambda_kl: f64,
    action_dim: usize,
    policy_grads: &mut [f64],
    posterior_grads: &mut [f64],
) -> Result<(f64, f64, f64)> {
    let k = posterior.spec.output_width();
    let total: usize = trajectories.iter().map(|t| t.len()).sum();
    if total == 0 {
        return Err(Error::config("empty VAE minibatch"));
    }
    let scale = 1.0 / total as f64;
    let mut recon_sum = 0.0;
    let mut kl_sum = 0.0;

    for (traj, traj_noise) in trajectories.iter().zip(noise) {
        let mut records: Vec<StepRecord> = Vec::with_capacity(traj.len());
        let mut c_prev = super::initial_code(k);

        for (t, tr) in traj.transitions.iter().enumerate() {
            let a_prev = if t == 0 {
                Action::null_encoding(action_dim)
            } else {
                traj.transitions[t - 1].action.encode(action_dim)
            };
            let input = posterior_input(c_prev.probs(), &tr.state, &a_prev);
            let (logits, posterior_tape) = posterior.forward(&input)?;
            let sample =
                gumbel_softmax_with_noise(&logits, temperature, false, &traj_noise[t])?;

            let mut policy_in = tr.state.clone();
            policy_in.extend_from_slice(sample.code.probs());
            let (policy_out, policy_tape) = policy.forward(&policy_in)?;

            let (nll, recon_upstream) = reconstruction(&tr.action, &policy_out, scale);
            recon_sum += nll;
            kl_sum += kl_to_uniform(&logits);

            c_prev = sample.code.clone();
            records.push(StepRecord { posterior_tape, logits, sample, policy_tape, recon_upstream });
        }

        // reverse pass: carry dL/dc_t backward through the code chain
        let mut carry = vec![0.0; k];
        for (t, rec) in records.into_iter().enumerate().rev() {
            let input_grads =
                policy.backward_into(rec.policy_tape, &rec.recon_upstream, policy_grads)?;
            let state_dim = policy.spec.input_width() - k;
            for (i, g) in input_grads[state_dim..].iter().enumerate() {
                carry[i] += g;
            }

            let mut upstream_logits = rec.sample.backward_to_logits(&carry);
            for (u, g) in upstream_logits.iter_mut().zip(kl_to_uniform_grad(&rec.logits)) {
                *u += lambda_kl * scale * g;
            }
            let post_in_grads =
                posterior.backward_into(rec.posterior_tape, &upstream_logits, posterior_grads)?;
            if t > 0 {
                carry.copy_from_slice(&post_in_grads[..k]);
            }
        }
    }

    let recon = recon_sum * scale;
    let kl = kl_sum * scale;
    Ok((recon + lambda_kl * kl, recon, kl))
}

/// Pretrain the posterior (and warm-start the policy) on demonstrations.
/// Mutates both networks in place and returns the per-epoch trace.
pub fn pretrain_posterior_vae(
    demos: &DemoSet,
    policy: &mut Network,
    posterior: &mut Network,
    action_dim: usize,
    cfg: &VaeConfig,
    seed: u64,
) -> Result<VaeTrace> {
    if demos.trajectories.is_empty() {
        return Err(Error::config("cannot pretrain on an empty demo set"));
    }
    let k = posterior.spec.output_width();
    if policy.spec.input_width() != demos.trajectories[0].transitions[0].state.len() + k {
        return Err(Error::config("policy input width must be state_dim + K"));
    }

    let mut rng = crate::rng::seeded(seed, crate::rng::stream::PRETRAIN);
    let hyper = AdamHyper::with_lr(cfg.lr);
    let mut policy_opt = AdamState::new(policy.params.len());
    let mut posterior_opt = AdamState::new(posterior.params.len());
    let mut trace = VaeTrace::default();

    let mut indices: Vec<usize> = (0..demos.trajectories.len()).collect();
    for epoch in 0..cfg.epochs {
        let frac = if cfg.epochs > 1 {
            epoch as f64 / (cfg.epochs - 1) as f64
        } else {
            0.0
        };
        let temperature = cfg.temp_start * (cfg.temp_end / cfg.temp_start).powf(frac);

        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_recon = 0.0;
        let mut epoch_kl = 0.0;
        let mut batches = 0.0;

        for chunk in indices.chunks(cfg.minibatch.max(1)) {
            let batch: Vec<&Trajectory> =
                chunk.iter().map(|&i| &demos.trajectories[i]).collect();
            let noise: Vec<Vec<Vec<f64>>> = batch
                .iter()
                .map(|t| (0..t.len()).map(|_| sample_gumbel_noise(k, &mut rng)).collect())
                .collect();

            let mut policy_grads = policy.grad_buffer();
            let mut posterior_grads = posterior.grad_buffer();
            let (loss, recon, kl) = vae_minibatch_loss(
                policy,
                posterior,
                &batch,
                &noise,
                temperature,
                cfg.lambda_kl,
                action_dim,
                &mut policy_grads,
                &mut posterior_grads,
            )?;
            if !loss.is_finite() {
                return Err(Error::numeric(format!(
                    "VAE pretraining diverged at epoch {epoch}"
                )));
            }
            adam_step(&mut policy.params, &policy_grads, &mut policy_opt, &hyper)?;
            adam_step(&mut posterior.params, &posterior_grads, &mut posterior_opt, &hyper)?;
            epoch_loss += loss;
            epoch_recon += recon;
            epoch_kl += kl;
            batches += 1.0;
        }

        trace.loss.push(epoch_loss / batches);
        trace.reconstruction.push(epoch_recon / batches);
        trace.kl.push(epoch_kl / batches);
    }
    Ok(trace)
}
