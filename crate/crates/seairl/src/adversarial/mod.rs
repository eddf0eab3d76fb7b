//! The adversarial head: multi-task reward, potential-based shaping, the
//! situational discriminator and its training loss, the alternative
//! reward handed to the policy, and the flat discriminator baseline.
//!
//! The discriminator has the density-ratio form `D = sigma(f - log pi)`
//! with `f = r(s,a,c) + gamma Phi'(s',c') - Phi(s,c)`; the next-state
//! potential always comes from the frozen target copy. Training pushes
//! `D -> 1` on expert transitions and `D -> 0` on generated ones, so `f`
//! rises on expert data. The flat baseline runs the opposite labeling with
//! policy reward `-log D(s,a)`.

use crate::envs::{Action, Done};
use crate::latent::posterior_bonus;
use crate::nn::heads::{sigmoid, softplus};
use crate::nn::{floor_log_prob, Network};
use crate::{Error, Result};

/// One labeled transition for the discriminator, with the policy
/// log-density of its action under the *current* policy (stored rollout
/// density for generated samples, freshly evaluated for expert ones).
#[derive(Debug, Clone, Copy)]
pub struct DiscSample<'a> {
    pub state: &'a [f64],
    pub action: &'a Action,
    pub code: &'a [f64],
    pub next_state: &'a [f64],
    pub next_code: &'a [f64],
    pub log_pi: f64,
    pub done: Done,
}

/// Both sides of the adversarial comparison. Expert codes come from
/// pseudo-labeling, recomputed against the current posterior.
#[derive(Debug)]
pub struct DiscriminatorBatch<'a> {
    pub expert: Vec<DiscSample<'a>>,
    pub generated: Vec<DiscSample<'a>>,
}

/// The shaped reward and its components; `f` is recomputable from the
/// parts, which the oracle tests exercise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapedReward {
    pub f: f64,
    pub reward: f64,
    pub phi_next_target: f64,
    pub phi_current: f64,
    pub gamma: f64,
}

impl ShapedReward {
    pub fn recompose(&self) -> f64 {
        self.reward + self.gamma * self.phi_next_target - self.phi_current
    }
}

fn reward_input(sample: &DiscSample, action_dim: usize) -> Vec<f64> {
    let a = sample.action.encode(action_dim);
    let mut v = Vec::with_capacity(sample.state.len() + a.len() + sample.code.len());
    v.extend_from_slice(sample.state);
    v.extend_from_slice(&a);
    v.extend_from_slice(sample.code);
    v
}

fn potential_input(state: &[f64], code: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(state.len() + code.len());
    v.extend_from_slice(state);
    v.extend_from_slice(code);
    v
}

/// `f = r(s,a,c) + gamma Phi'(s',c') - Phi(s,c)`. On termination the
/// next-state potential is dropped; on truncation it is kept.
pub fn shaped_f(
    reward: &Network,
    potential: &Network,
    potential_target: &Network,
    sample: &DiscSample,
    action_dim: usize,
    gamma: f64,
) -> Result<ShapedReward> {
    let r = reward.eval(&reward_input(sample, action_dim))?[0];
    let phi_current = potential.eval(&potential_input(sample.state, sample.code))?[0];
    let phi_next_target = if sample.done == Done::Terminated {
        0.0
    } else {
        potential_target.eval(&potential_input(sample.next_state, sample.next_code))?[0]
    };
    Ok(ShapedReward { f: r + gamma * phi_next_target - phi_current, reward: r, phi_next_target, phi_current, gamma })
}

/// The optimal situational discriminator `e^f / (e^f + pi)`, computed in
/// the stable logistic form `sigma(f - log pi)`.
pub fn discriminator(f: f64, log_pi: f64) -> f64 {
    sigmoid(f - log_pi)
}

/// Binary cross-entropy for the situational discriminator: expert
/// transitions toward `D = 1`, generated toward `D = 0`, averaged per side
/// and then across sides. Policy densities are constants. Gradients reach
/// the reward net (and the current potential when a buffer is supplied;
/// the training loop updates the potential only through the empowerment
/// regularizer).
pub fn discriminator_loss(
    reward: &Network,
    potential: &Network,
    potential_target: &Network,
    batch: &DiscriminatorBatch,
    action_dim: usize,
    gamma: f64,
    mut reward_grads: Option<&mut [f64]>,
    mut potential_grads: Option<&mut [f64]>,
) -> Result<f64> {
    if batch.expert.is_empty() || batch.generated.is_empty() {
        return Err(Error::config("discriminator batch needs both sides non-empty"));
    }
    let mut loss = 0.0;
    for (samples, expert_side) in [(&batch.expert, true), (&batch.generated, false)] {
        let scale = 0.5 / samples.len() as f64;
        for sample in samples.iter() {
            let rin = reward_input(sample, action_dim);
            let (r_out, r_tape) = reward.forward(&rin)?;
            let pin = potential_input(sample.state, sample.code);
            let (phi_out, phi_tape) = potential.forward(&pin)?;
            let phi_next = if sample.done == Done::Terminated {
                0.0
            } else {
                potential_target.eval(&potential_input(sample.next_state, sample.next_code))?[0]
            };
            let f = r_out[0] + gamma * phi_next - phi_out[0];
            let z = f - floor_log_prob(sample.log_pi);
            // expert: -log D = softplus(-z); generated: -log(1-D) = softplus(z)
            let (term, dz) = if expert_side {
                (softplus(-z), sigmoid(z) - 1.0)
            } else {
                (softplus(z), sigmoid(z))
            };
            loss += scale * term;
            if let Some(buf) = reward_grads.as_deref_mut() {
                reward.backward_into(r_tape, &[scale * dz], buf)?;
            }
            if let Some(buf) = potential_grads.as_deref_mut() {
                potential.backward_into(phi_tape, &[-scale * dz], buf)?;
            }
        }
    }
    Ok(loss)
}

/// The alternative reward driving the policy gradient:
/// `r_hat = f + lambda_q log Q(c_t | s_t, a_{t-1}, c_{t-1})`.
#[allow(clippy::too_many_arguments)]
pub fn alternative_reward(
    reward: &Network,
    potential: &Network,
    potential_target: &Network,
    posterior: &Network,
    sample: &DiscSample,
    prev_code: &[f64],
    prev_action_enc: &[f64],
    action_dim: usize,
    gamma: f64,
    lambda_q: f64,
) -> Result<f64> {
    let f = shaped_f(reward, potential, potential_target, sample, action_dim, gamma)?.f;
    if lambda_q == 0.0 {
        return Ok(f);
    }
    let realized = hard_index(sample.code)?;
    let bonus = posterior_bonus(posterior, prev_code, sample.state, prev_action_enc, realized)?;
    Ok(f + lambda_q * bonus)
}

fn hard_index(code: &[f64]) -> Result<usize> {
    let mut best = 0;
    for (i, &p) in code.iter().enumerate() {
        if p > code[best] {
            best = i;
        }
    }
    if code.is_empty() {
        return Err(Error::config("empty code in alternative reward"));
    }
    Ok(best)
}

/// Flat discriminator logit over `(s, a)`.
pub fn gail_logit(disc: &Network, state: &[f64], action: &Action, action_dim: usize) -> Result<f64> {
    let a = action.encode(action_dim);
    let mut v = Vec::with_capacity(state.len() + a.len());
    v.extend_from_slice(state);
    v.extend_from_slice(&a);
    Ok(disc.eval(&v)?[0])
}

/// Baseline policy reward `-log D(s,a)`: high where the discriminator
/// thinks "expert". (The flat head labels generated 1, expert 0.)
pub fn gail_reward(disc: &Network, state: &[f64], action: &Action, action_dim: usize) -> Result<f64> {
    Ok(softplus(-gail_logit(disc, state, action, action_dim)?))
}

/// BCE for the flat baseline head: generated toward `D = 1`, expert toward
/// `D = 0`.
pub fn gail_discriminator_loss(
    disc: &Network,
    expert: &[(&[f64], &Action)],
    generated: &[(&[f64], &Action)],
    action_dim: usize,
    mut grads: Option<&mut [f64]>,
) -> Result<f64> {
    if expert.is_empty() || generated.is_empty() {
        return Err(Error::config("GAIL batch needs both sides non-empty"));
    }
    let mut loss = 0.0;
    for (samples, generated_side) in [(generated, true), (expert, false)] {
        let scale = 0.5 / samples.len() as f64;
        for (state, action) in samples.iter() {
            let a = action.encode(action_dim);
            let mut v = Vec::with_capacity(state.len() + a.len());
            v.extend_from_slice(state);
            v.extend_from_slice(&a);
            let (out, tape) = disc.forward(&v)?;
            let z = out[0];
            let (term, dz) = if generated_side {
                (softplus(-z), sigmoid(z) - 1.0)
            } else {
                (softplus(z), sigmoid(z))
            };
            loss += scale * term;
            if let Some(buf) = grads.as_deref_mut() {
                disc.backward_into(tape, &[scale * dz], buf)?;
            }
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{adam_step, AdamHyper, AdamState, MlpSpec, OutputHead, Params};
    use crate::rng::seeded;
    use rand::Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    fn nets(state_dim: usize, action_dim: usize, k: usize) -> (Network, Network, Network) {
        let mut rng = seeded(60, 0);
        let reward = Network::init(
            MlpSpec::with_hidden(state_dim + action_dim + k, &[8], 1, OutputHead::Linear).unwrap(),
            &mut rng,
        );
        let potential = Network::init(
            MlpSpec::with_hidden(state_dim + k, &[8], 1, OutputHead::Linear).unwrap(),
            &mut rng,
        );
        let target = Network::init(
            MlpSpec::with_hidden(state_dim + k, &[8], 1, OutputHead::Linear).unwrap(),
            &mut rng,
        );
        (reward, potential, target)
    }

    fn zero_like(net: &Network) -> Network {
        Network { spec: net.spec.clone(), params: Params::zeros(&net.spec) }
    }

    fn sample_data(n: usize, state_dim: usize, k: usize) -> Vec<(Vec<f64>, Action, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
        let mut rng = seeded(61, 0);
        (0..n)
            .map(|_| {
                let s: Vec<f64> = (0..state_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let a = Action::Discrete(rng.random_range(0..4));
                let mut c = vec![0.0; k];
                c[rng.random_range(0..k)] = 1.0;
                let s2: Vec<f64> = (0..state_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let c2 = c.clone();
                let log_pi = rng.random_range(-3.0..-0.1);
                (s, a, c, s2, c2, log_pi)
            })
            .collect()
    }

    fn to_samples<'a>(
        data: &'a [(Vec<f64>, Action, Vec<f64>, Vec<f64>, Vec<f64>, f64)],
    ) -> Vec<DiscSample<'a>> {
        data.iter()
            .map(|(s, a, c, s2, c2, lp)| DiscSample {
                state: s,
                action: a,
                code: c,
                next_state: s2,
                next_code: c2,
                log_pi: *lp,
                done: Done::No,
            })
            .collect()
    }

    #[test]
    fn zero_potentials_make_f_equal_r() {
        let (reward, potential, target) = nets(4, 4, 2);
        let (potential, target) = (zero_like(&potential), zero_like(&target));
        let data = sample_data(5, 4, 2);
        for sample in to_samples(&data) {
            let shaped = shaped_f(&reward, &potential, &target, &sample, 4, 0.99).unwrap();
            assert_eq!(shaped.f, shaped.reward);
        }
    }

    #[test]
    fn constant_potential_telescopes_at_gamma_one() {
        let (reward, potential, target) = nets(4, 4, 2);
        let (mut potential, mut target) = (zero_like(&potential), zero_like(&target));
        let kappa = 1.37;
        let n = potential.params.len();
        potential.params.values_mut()[n - 1] = kappa;
        target.params.values_mut()[n - 1] = kappa;
        let data = sample_data(5, 4, 2);
        for sample in to_samples(&data) {
            let shaped = shaped_f(&reward, &potential, &target, &sample, 4, 1.0).unwrap();
            assert!((shaped.f - shaped.reward).abs() < 1e-12);
        }
    }

    #[test]
    fn shaped_f_matches_hand_composition() {
        let (reward, potential, target) = nets(4, 4, 2);
        let data = sample_data(8, 4, 2);
        for sample in to_samples(&data) {
            let shaped = shaped_f(&reward, &potential, &target, &sample, 4, 0.9).unwrap();
            // independent composition from separate forward calls
            let mut rin = sample.state.to_vec();
            rin.extend(sample.action.encode(4));
            rin.extend_from_slice(sample.code);
            let r = reward.eval(&rin).unwrap()[0];
            let mut pin = sample.state.to_vec();
            pin.extend_from_slice(sample.code);
            let phi = potential.eval(&pin).unwrap()[0];
            let mut pin2 = sample.next_state.to_vec();
            pin2.extend_from_slice(sample.next_code);
            let phi2 = target.eval(&pin2).unwrap()[0];
            let by_hand = r + 0.9 * phi2 - phi;
            assert!((shaped.f - by_hand).abs() < 1e-12);
            assert!((shaped.recompose() - shaped.f).abs() < 1e-15);
        }
    }

    #[test]
    fn terminal_drops_next_potential() {
        let (reward, potential, target) = nets(4, 4, 2);
        let data = sample_data(1, 4, 2);
        let mut sample = to_samples(&data)[0];
        sample.done = Done::Terminated;
        let shaped = shaped_f(&reward, &potential, &target, &sample, 4, 0.99).unwrap();
        assert_eq!(shaped.phi_next_target, 0.0);
        sample.done = Done::Truncated;
        let shaped2 = shaped_f(&reward, &potential, &target, &sample, 4, 0.99).unwrap();
        assert_ne!(shaped2.phi_next_target, 0.0);
    }

    #[test]
    fn discriminator_closed_form_points() {
        // f = log pi gives exactly 1/2
        assert_eq!(discriminator(-0.7, -0.7), 0.5);
        // f = ln 3 against pi = 1: 3 / (3 + 1)
        let d = discriminator(3.0_f64.ln(), 0.0);
        assert!((d - 0.75).abs() < 1e-15);
        // huge margin saturates without overflow
        let d = discriminator(45.0, -5.0);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chance_level_loss_is_ln_two() {
        // zero nets and log_pi = 0 give z = 0, D = 1/2 on every sample
        let (reward, potential, target) = nets(4, 4, 2);
        let (reward, potential, target) = (zero_like(&reward), zero_like(&potential), zero_like(&target));
        let mut data = sample_data(6, 4, 2);
        for d in &mut data {
            d.5 = 0.0;
        }
        let samples = to_samples(&data);
        let batch = DiscriminatorBatch {
            expert: samples[..3].to_vec(),
            generated: samples[3..].to_vec(),
        };
        let loss =
            discriminator_loss(&reward, &potential, &target, &batch, 4, 0.99, None, None).unwrap();
        assert!((loss - LN2).abs() < 1e-12);
    }

    #[test]
    fn separated_batch_loss_vanishes() {
        // with zero nets f = 0; expert log_pi -> -50 drives D -> 1,
        // generated log_pi -> +50 drives D -> 0
        let (reward, potential, target) = nets(4, 4, 2);
        let (reward, potential, target) = (zero_like(&reward), zero_like(&potential), zero_like(&target));
        let mut data = sample_data(6, 4, 2);
        for (i, d) in data.iter_mut().enumerate() {
            d.5 = if i < 3 { -50.0 } else { 50.0 };
        }
        let samples = to_samples(&data);
        let batch = DiscriminatorBatch {
            expert: samples[..3].to_vec(),
            generated: samples[3..].to_vec(),
        };
        let loss =
            discriminator_loss(&reward, &potential, &target, &batch, 4, 0.99, None, None).unwrap();
        assert!(loss < 1e-12, "separated loss {loss}");
    }

    #[test]
    fn discriminator_gradients_pass_fd() {
        let (reward, potential, target) = nets(3, 4, 2);
        let data = sample_data(6, 3, 2);
        let samples = to_samples(&data);
        let batch = DiscriminatorBatch {
            expert: samples[..3].to_vec(),
            generated: samples[3..].to_vec(),
        };
        let mut rg = reward.grad_buffer();
        let mut pg = potential.grad_buffer();
        discriminator_loss(&reward, &potential, &target, &batch, 4, 0.95, Some(&mut rg), Some(&mut pg))
            .unwrap();

        let reward_err = crate::nn::grad_check(reward.params.values(), &rg, 1e-6, |v| {
            let r2 = Network {
                spec: reward.spec.clone(),
                params: Params::from_values(&reward.spec, v.to_vec()).unwrap(),
            };
            discriminator_loss(&r2, &potential, &target, &batch, 4, 0.95, None, None).unwrap()
        });
        assert!(reward_err < 1e-4, "reward grad error {reward_err}");

        let pot_err = crate::nn::grad_check(potential.params.values(), &pg, 1e-6, |v| {
            let p2 = Network {
                spec: potential.spec.clone(),
                params: Params::from_values(&potential.spec, v.to_vec()).unwrap(),
            };
            discriminator_loss(&reward, &p2, &target, &batch, 4, 0.95, None, None).unwrap()
        });
        assert!(pot_err < 1e-4, "potential grad error {pot_err}");
    }

    #[test]
    fn alternative_reward_composition() {
        let (reward, potential, target) = nets(4, 4, 3);
        let posterior = Network::init(
            crate::latent::posterior_spec(4, 4, 3, &[8]).unwrap(),
            &mut seeded(62, 0),
        );
        let data = sample_data(4, 4, 3);
        let prev_code = [1.0, 0.0, 0.0];
        let prev_action = [0.0; 4];
        for sample in to_samples(&data) {
            let f = shaped_f(&reward, &potential, &target, &sample, 4, 0.99).unwrap().f;
            // lambda_q = 0 reduces to f
            let r0 = alternative_reward(
                &reward, &potential, &target, &posterior, &sample, &prev_code, &prev_action, 4,
                0.99, 0.0,
            )
            .unwrap();
            assert_eq!(r0, f);
            // composition equals independently computed parts
            let realized = sample.code.iter().position(|&p| p == 1.0).unwrap();
            let bonus = posterior_bonus(&posterior, &prev_code, sample.state, &prev_action, realized)
                .unwrap();
            let r1 = alternative_reward(
                &reward, &potential, &target, &posterior, &sample, &prev_code, &prev_action, 4,
                0.99, 1.0,
            )
            .unwrap();
            assert!((r1 - (f + bonus)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_posterior_bonus_shifts_by_ln_k() {
        let (reward, potential, target) = nets(4, 4, 3);
        let spec = crate::latent::posterior_spec(4, 4, 3, &[8]).unwrap();
        let posterior = Network { params: Params::zeros(&spec), spec };
        let data = sample_data(3, 4, 3);
        let prev_code = [1.0, 0.0, 0.0];
        let prev_action = [0.0; 4];
        for sample in to_samples(&data) {
            let f = shaped_f(&reward, &potential, &target, &sample, 4, 0.99).unwrap().f;
            let r = alternative_reward(
                &reward, &potential, &target, &posterior, &sample, &prev_code, &prev_action, 4,
                0.99, 1.0,
            )
            .unwrap();
            assert!((r - (f - 3.0_f64.ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn gail_chance_loss_and_gradients() {
        let mut rng = seeded(63, 0);
        let disc = Network::init(MlpSpec::with_hidden(7, &[8], 1, OutputHead::Linear).unwrap(), &mut rng);
        let zero = zero_like(&disc);
        let data = sample_data(6, 3, 1);
        let pairs: Vec<(&[f64], &Action)> =
            data.iter().map(|(s, a, ..)| (s.as_slice(), a)).collect();
        let loss = gail_discriminator_loss(&zero, &pairs[..3], &pairs[3..], 4, None).unwrap();
        assert!((loss - LN2).abs() < 1e-12);

        let mut grads = disc.grad_buffer();
        gail_discriminator_loss(&disc, &pairs[..3], &pairs[3..], 4, Some(&mut grads)).unwrap();
        let err = crate::nn::grad_check(disc.params.values(), &grads, 1e-6, |v| {
            let d2 = Network {
                spec: disc.spec.clone(),
                params: Params::from_values(&disc.spec, v.to_vec()).unwrap(),
            };
            gail_discriminator_loss(&d2, &pairs[..3], &pairs[3..], 4, None).unwrap()
        });
        assert!(err < 1e-4, "gail grad error {err}");
    }

    #[test]
    fn identical_distributions_drive_d_to_half() {
        // expert and generated drawn from the same distribution: the
        // trained discriminator should hover at 1/2 on held-out data
        let mut rng = seeded(64, 0);
        let mut disc =
            Network::init(MlpSpec::with_hidden(5, &[16], 1, OutputHead::Linear).unwrap(), &mut rng);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<(Vec<f64>, Action)> {
            (0..n)
                .map(|_| {
                    let s: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                    (s, Action::Discrete(rng.random_range(0..2)))
                })
                .collect()
        };
        let expert = draw(&mut rng, 256);
        let generated = draw(&mut rng, 256);
        let held_out = draw(&mut rng, 512);
        let e: Vec<(&[f64], &Action)> = expert.iter().map(|(s, a)| (s.as_slice(), a)).collect();
        let g: Vec<(&[f64], &Action)> = generated.iter().map(|(s, a)| (s.as_slice(), a)).collect();
        let mut opt = AdamState::new(disc.params.len());
        let hyper = AdamHyper::with_lr(1e-2);
        for _ in 0..300 {
            let mut grads = disc.grad_buffer();
            gail_discriminator_loss(&disc, &e, &g, 2, Some(&mut grads)).unwrap();
            adam_step(&mut disc.params, &grads, &mut opt, &hyper).unwrap();
        }
        let mean_d: f64 = held_out
            .iter()
            .map(|(s, a)| sigmoid(gail_logit(&disc, s, a, 2).unwrap()))
            .sum::<f64>()
            / held_out.len() as f64;
        assert!((0.45..=0.55).contains(&mean_d), "mean D {mean_d}");
    }
}
