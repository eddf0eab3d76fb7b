//! Clipped-surrogate policy improvement with an entropy bonus and the
//! empowerment regularizer folded into the policy objective.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::empowerment::{empowerment_reg_loss, EmpowermentSample};
use crate::envs::Action;
use crate::nn::heads::{
    categorical_entropy, categorical_entropy_grad, categorical_log_prob,
    categorical_log_prob_grad, gaussian_entropy, gaussian_log_prob, gaussian_log_prob_grads,
};
use crate::nn::{adam_step, AdamHyper, AdamState, Network};
use crate::{Error, Result};

/// Flattened on-policy batch. Advantages must already be normalized.
#[derive(Debug, Clone, Default)]
pub struct PpoBatch {
    pub states: Vec<Vec<f64>>,
    pub codes: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub next_states: Vec<Vec<f64>>,
    pub log_pi_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl PpoBatch {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PpoHyper {
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub lambda_h: f64,
    pub lambda_i: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub kl_old_new: f64,
    pub kl_warning: bool,
}

fn policy_log_prob_grad(out: &[f64], action: &Action) -> (f64, Vec<f64>) {
    match action {
        Action::Discrete(a) => (
            categorical_log_prob(out, *a),
            categorical_log_prob_grad(out, *a),
        ),
        Action::Continuous(a) => {
            let d = out.len() / 2;
            let (mean, log_std) = out.split_at(d);
            let lp = gaussian_log_prob(mean, log_std, a);
            let (dm, ds) = gaussian_log_prob_grads(mean, log_std, a);
            let mut g = dm;
            g.extend(ds);
            (lp, g)
        }
    }
}

fn policy_entropy_grad(out: &[f64], action: &Action) -> (f64, Vec<f64>) {
    match action {
        Action::Discrete(_) => (categorical_entropy(out), categorical_entropy_grad(out)),
        Action::Continuous(_) => {
            let d = out.len() / 2;
            let log_std = &out[d..];
            let h = gaussian_entropy(log_std);
            let mut g = vec![0.0; out.len()];
            for gi in g[d..].iter_mut() {
                *gi = 1.0;
            }
            (h, g)
        }
    }
}

/// The full policy objective (as a loss to minimize) on the rows `idx`:
/// `-mean(min(ratio A, clip(ratio) A)) - lambda_h mean H + lambda_i l_I`.
/// Accumulates exact gradients into `grads` when given. Pure given the
/// parameters, so it is the target of the PPO finite-difference check.
#[allow(clippy::too_many_arguments)]
pub fn ppo_policy_loss(
    policy: &Network,
    potential: &Network,
    inverse: &Network,
    batch: &PpoBatch,
    idx: &[usize],
    hyper: &PpoHyper,
    mut grads: Option<&mut [f64]>,
) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::config("empty PPO minibatch"));
    }
    let m = idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let mut input = batch.states[i].clone();
        input.extend_from_slice(&batch.codes[i]);
        let (out, tape) = policy.forward(&input)?;
        let (lp, dlp) = policy_log_prob_grad(&out, &batch.actions[i]);
        let (h, dh) = policy_entropy_grad(&out, &batch.actions[i]);

        let ratio = (lp - batch.log_pi_old[i]).exp();
        let adv = batch.advantages[i];
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - hyper.clip, 1.0 + hyper.clip) * adv;
        let obj = unclipped.min(clipped);
        loss += (-obj - hyper.lambda_h * h) / m;

        if let Some(buf) = grads.as_deref_mut() {
            // gradient of min: zero when the clipped branch is active and
            // saturated, ratio * dlp otherwise
            let coeff = if unclipped <= clipped { adv * ratio } else { 0.0 };
            let upstream: Vec<f64> = dlp
                .iter()
                .zip(&dh)
                .map(|(dl, dhi)| (-coeff * dl - hyper.lambda_h * dhi) / m)
                .collect();
            policy.backward_into(tape, &upstream, buf)?;
        }
    }

    if hyper.lambda_i > 0.0 {
        let samples: Vec<EmpowermentSample> = idx
            .iter()
            .map(|&i| EmpowermentSample {
                state: &batch.states[i],
                code: &batch.codes[i],
                action: &batch.actions[i],
                next_state: &batch.next_states[i],
            })
            .collect();
        let li = if let Some(buf) = grads.as_deref_mut() {
            let mut raw = vec![0.0; buf.len()];
            let li =
                empowerment_reg_loss(policy, potential, inverse, &samples, Some(&mut raw), None)?;
            for (b, r) in buf.iter_mut().zip(&raw) {
                *b += hyper.lambda_i * r;
            }
            li
        } else {
            empowerment_reg_loss(policy, potential, inverse, &samples, None, None)?
        };
        loss += hyper.lambda_i * li;
    }
    Ok(loss)
}

/// Squared-error critic loss on the rows `idx`.
pub fn value_loss(
    value: &Network,
    batch: &PpoBatch,
    idx: &[usize],
    mut grads: Option<&mut [f64]>,
) -> Result<f64> {
    let m = idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let mut input = batch.states[i].clone();
        input.extend_from_slice(&batch.codes[i]);
        let (out, tape) = value.forward(&input)?;
        let err = out[0] - batch.returns[i];
        loss += err * err / m;
        if let Some(buf) = grads.as_deref_mut() {
            value.backward_into(tape, &[2.0 * err / m], buf)?;
        }
    }
    Ok(loss)
}

/// Run the clipped-surrogate update: `epochs` passes of shuffled
/// minibatches over the batch, updating the policy and the critic.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    policy: &mut Network,
    value: &mut Network,
    potential: &Network,
    inverse: &Network,
    batch: &PpoBatch,
    hyper: &PpoHyper,
    policy_opt: &mut AdamState,
    value_opt: &mut AdamState,
    rng: &mut ChaCha8Rng,
) -> Result<PpoStats> {
    if batch.is_empty() {
        return Err(Error::config("empty PPO batch"));
    }
    let adam = AdamHyper::with_lr(hyper.lr);
    let mut stats = PpoStats::default();

    // entropy of the behavior snapshot, before any update
    let mut entropy = 0.0;
    for i in 0..batch.len() {
        let mut input = batch.states[i].clone();
        input.extend_from_slice(&batch.codes[i]);
        let out = policy.eval(&input)?;
        entropy += policy_entropy_grad(&out, &batch.actions[i]).0;
    }
    stats.entropy = entropy / batch.len() as f64;

    let mut indices: Vec<usize> = (0..batch.len()).collect();
    let mut loss_sum = 0.0;
    let mut vloss_sum = 0.0;
    let mut n_minibatches = 0.0;
    for _ in 0..hyper.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(hyper.minibatch.max(1)) {
            let mut pg = policy.grad_buffer();
            let loss =
                ppo_policy_loss(policy, potential, inverse, batch, chunk, hyper, Some(&mut pg))?;
            adam_step(&mut policy.params, &pg, policy_opt, &adam)?;

            let mut vg = value.grad_buffer();
            let vloss = value_loss(value, batch, chunk, Some(&mut vg))?;
            adam_step(&mut value.params, &vg, value_opt, &adam)?;

            loss_sum += loss;
            vloss_sum += vloss;
            n_minibatches += 1.0;
        }
    }
    stats.policy_loss = loss_sum / n_minibatches;
    stats.value_loss = vloss_sum / n_minibatches;

    // KL(old || new) estimated on the batch
    let mut kl = 0.0;
    for i in 0..batch.len() {
        let mut input = batch.states[i].clone();
        input.extend_from_slice(&batch.codes[i]);
        let out = policy.eval(&input)?;
        let (lp, _) = policy_log_prob_grad(&out, &batch.actions[i]);
        kl += batch.log_pi_old[i] - lp;
    }
    stats.kl_old_new = kl / batch.len() as f64;
    stats.kl_warning = stats.kl_old_new > 0.5;
    Ok(stats)
}
