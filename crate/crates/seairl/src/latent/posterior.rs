//! The sub-task posterior `Q(c_t | c_{t-1}, s_t, a_{t-1})` and its two
//! consumers: pseudo-labeling of expert trajectories and the
//! directed-information reward bonus.

use rand_chacha::ChaCha8Rng;

use super::{initial_code, SubTaskCode};
use crate::envs::{Action, Trajectory};
use crate::nn::heads::{log_softmax, sample_categorical};
use crate::nn::{floor_log_prob, MlpSpec, Network, OutputHead};
use crate::Result;

/// Posterior network shape: `(c_prev ++ s ++ a_prev) -> K logits`.
pub fn posterior_spec(state_dim: usize, action_dim: usize, k: usize, hidden: &[usize]) -> Result<MlpSpec> {
    MlpSpec::with_hidden(k + state_dim + action_dim, hidden, k, OutputHead::Linear)
}

/// Concatenate the posterior input in its declared order.
pub fn posterior_input(c_prev: &[f64], s: &[f64], a_prev: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(c_prev.len() + s.len() + a_prev.len());
    v.extend_from_slice(c_prev);
    v.extend_from_slice(s);
    v.extend_from_slice(a_prev);
    v
}

/// K finite logits for the current code.
pub fn posterior_logits(
    net: &Network,
    c_prev: &[f64],
    s: &[f64],
    a_prev: &[f64],
) -> Result<Vec<f64>> {
    net.eval(&posterior_input(c_prev, s, a_prev))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    Sample,
    Argmax,
}

/// Attach a code to every step of a trajectory by rolling the posterior
/// forward from the initial-code convention. Argmax mode is deterministic
/// with ties broken toward the lowest index.
pub fn pseudo_label(
    net: &Network,
    traj: &Trajectory,
    mode: LabelMode,
    action_dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let k = net.spec.output_width();
    let mut c_prev = initial_code(k);
    let mut labels = Vec::with_capacity(traj.len());
    for (t, tr) in traj.transitions.iter().enumerate() {
        let a_prev = if t == 0 {
            Action::null_encoding(action_dim)
        } else {
            traj.transitions[t - 1].action.encode(action_dim)
        };
        let logits = posterior_logits(net, c_prev.probs(), &tr.state, &a_prev)?;
        let idx = match mode {
            LabelMode::Argmax => {
                let mut best = 0;
                for (i, &l) in logits.iter().enumerate() {
                    if l > logits[best] {
                        best = i;
                    }
                }
                best
            }
            LabelMode::Sample => sample_categorical(&logits, rng).0,
        };
        labels.push(idx);
        c_prev = SubTaskCode::one_hot(idx, k);
    }
    Ok(labels)
}

/// `log Q(c_t | c_{t-1}, s_t, a_{t-1})` for the realized hard code,
/// floored at the global log-prob floor. Always <= 0.
pub fn posterior_bonus(
    net: &Network,
    c_prev: &[f64],
    s: &[f64],
    a_prev: &[f64],
    realized: usize,
) -> Result<f64> {
    let logits = posterior_logits(net, c_prev, s, a_prev)?;
    Ok(floor_log_prob(log_softmax(&logits)[realized]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Env, EnvSpec};
    use crate::nn::Params;
    use crate::rng::seeded;

    fn tiny_posterior(k: usize) -> Network {
        let spec = posterior_spec(4, 2, k, &[8]).unwrap();
        let mut rng = seeded(21, 0);
        Network::init(spec, &mut rng)
    }

    #[test]
    fn zero_weights_give_uniform_logits() {
        let spec = posterior_spec(4, 2, 3, &[8]).unwrap();
        let net = Network { params: Params::zeros(&spec), spec };
        let logits = posterior_logits(&net, &[1.0, 0.0, 0.0], &[0.5; 4], &[0.0, 0.0]).unwrap();
        assert!(logits.iter().all(|&l| l == logits[0]));
    }

    #[test]
    fn permuted_inputs_with_permuted_weights_agree() {
        // swapping two input coordinates and the matching first-layer
        // weight columns leaves the output unchanged
        let net = tiny_posterior(3);
        let c = [0.2, 0.5, 0.3];
        let s = [0.1, 0.9, 0.4, 0.7];
        let a = [1.0, 0.0];
        let base = posterior_logits(&net, &c, &s, &a).unwrap();

        let in_dim = net.spec.input_width();
        let (i, j) = (3, 5); // two state coordinates
        let mut swapped = net.clone();
        let hidden = net.spec.widths()[1];
        for row in 0..hidden {
            let vals = swapped.params.values_mut();
            vals.swap(row * in_dim + i, row * in_dim + j);
        }
        let mut input = posterior_input(&c, &s, &a);
        input.swap(i, j);
        let permuted = swapped.eval(&input).unwrap();
        for (x, y) in base.iter().zip(&permuted) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn argmax_labels_are_deterministic_and_cover_length() {
        let env = Env::new(EnvSpec::grid_two_scenario()).unwrap();
        let traj = env.expert_episode(0, &mut seeded(4, 2)).unwrap();
        let spec = posterior_spec(env.spec.state_dim(), 6, 3, &[16]).unwrap();
        let net = Network::init(spec, &mut seeded(8, 0));
        let mut rng = seeded(0, 0);
        let a = pseudo_label(&net, &traj, LabelMode::Argmax, 6, &mut rng).unwrap();
        let b = pseudo_label(&net, &traj, LabelMode::Argmax, 6, &mut rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), traj.len());
    }

    #[test]
    fn uniform_posterior_argmax_picks_lowest_index() {
        let spec = posterior_spec(17, 6, 3, &[8]).unwrap();
        let net = Network { params: Params::zeros(&spec), spec };
        let env = Env::new(EnvSpec::grid_two_scenario()).unwrap();
        let traj = env.expert_episode(0, &mut seeded(4, 2)).unwrap();
        let labels = pseudo_label(&net, &traj, LabelMode::Argmax, 6, &mut seeded(0, 0)).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn uniform_bonus_is_minus_log_k() {
        let spec = posterior_spec(4, 2, 3, &[8]).unwrap();
        let net = Network { params: Params::zeros(&spec), spec };
        let bonus =
            posterior_bonus(&net, &[1.0, 0.0, 0.0], &[0.0; 4], &[0.0, 0.0], 2).unwrap();
        assert!((bonus + 3.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bonus_matches_independent_softmax() {
        let net = tiny_posterior(3);
        let c = [1.0, 0.0, 0.0];
        let s = [0.3, -0.4, 0.8, 0.0];
        let a = [0.0, 1.0];
        let logits = posterior_logits(&net, &c, &s, &a).unwrap();
        // independent route: direct softmax component
        let exps: Vec<f64> = logits.iter().map(|l| l.exp()).collect();
        let z: f64 = exps.iter().sum();
        for realized in 0..3 {
            let direct = (exps[realized] / z).ln();
            let bonus = posterior_bonus(&net, &c, &s, &a, realized).unwrap();
            assert!((bonus - direct).abs() < 1e-12);
            assert!(bonus <= 0.0);
        }
    }

    #[test]
    fn near_certain_posterior_bonus_approaches_zero() {
        // drive one logit far up via the output bias
        let spec = posterior_spec(2, 1, 2, &[4]).unwrap();
        let mut net = Network { params: Params::zeros(&spec.clone()), spec };
        let n = net.params.len();
        net.params.values_mut()[n - 2] = 40.0; // bias of logit 0
        let bonus = posterior_bonus(&net, &[1.0, 0.0], &[0.0, 0.0], &[0.0], 0).unwrap();
        assert!(bonus > -1e-12);
    }
}
