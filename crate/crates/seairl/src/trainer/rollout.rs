//! Rollout collection with the hierarchical policy: at every step the
//! posterior samples the current code from `(c_prev, s_t, a_prev)`, then
//! the policy samples an action from `(s_t, c_t)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::envs::{
    Action, ActionSpace, Done, Env, EvalOnlyReward, Trajectory, Transition,
};
use crate::latent::{gumbel_softmax_sample, initial_code, posterior_logits, SubTaskCode};
use crate::nn::heads::{sample_categorical, sample_gaussian};
use crate::nn::Network;
use crate::{Error, Result};

/// Sample an action and its log-density from the policy output.
pub fn sample_action(
    space: ActionSpace,
    policy: &Network,
    state: &[f64],
    code: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(Action, f64)> {
    let mut input = state.to_vec();
    input.extend_from_slice(code);
    let out = policy.eval(&input)?;
    Ok(match space {
        ActionSpace::Discrete(_) => {
            let (a, lp) = sample_categorical(&out, rng);
            (Action::Discrete(a), lp)
        }
        ActionSpace::Continuous(d) => {
            let (mean, log_std) = out.split_at(d);
            let (a, lp) = sample_gaussian(mean, log_std, rng);
            (Action::Continuous(a), lp)
        }
    })
}

/// Collect whole episodes until at least `n_steps` transitions exist.
/// Scenarios are drawn uniformly per episode. Every transition carries its
/// hard code, the next step's code, and the action log-density.
pub fn collect_rollouts(
    env: &Env,
    policy: &Network,
    posterior: &Network,
    k: usize,
    n_steps: usize,
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Trajectory>> {
    let space = env.spec.action_space();
    let a_dim = space.encoded_dim();
    let n_scenarios = env.spec.scenarios.len();
    let mut trajectories = Vec::new();
    let mut total = 0usize;

    while total < n_steps {
        let scenario = rng.random_range(0..n_scenarios);
        let mut state = env
            .reset(scenario, rng)
            .map_err(|e| Error::config(format!("rollout reset failed: {e}")))?;
        let mut c_prev = initial_code(k);
        let mut a_prev_enc = Action::null_encoding(a_dim);

        let mut steps: Vec<(Vec<f64>, SubTaskCode, Action, f64, Vec<f64>, f64, Done)> = Vec::new();
        let mut labels = Vec::new();

        loop {
            let obs = env.observe(&state);
            let logits = posterior_logits(posterior, c_prev.probs(), &obs, &a_prev_enc)?;
            let code = gumbel_softmax_sample(&logits, temperature, true, rng)?.code;
            let (action, log_pi) = sample_action(space, policy, &obs, code.probs(), rng)?;
            labels.push(env.current_subtask(&state));

            let step = env
                .step(&state, &action)
                .map_err(|e| Error::config(format!("env fault at step {}: {e}", steps.len())))?;
            let next_obs = env.observe(&step.next);
            a_prev_enc = action.encode(a_dim);
            steps.push((obs, code.clone(), action, log_pi, next_obs, step.reward, step.done));
            c_prev = code;
            state = step.next;
            if step.done.is_episode_end() {
                break;
            }
        }

        // code for the final next state, so the last transition's
        // next_code (and a truncation bootstrap) are well defined
        let final_obs = env.observe(&state);
        let final_logits = posterior_logits(posterior, c_prev.probs(), &final_obs, &a_prev_enc)?;
        let final_code = gumbel_softmax_sample(&final_logits, temperature, true, rng)?.code;

        let n = steps.len();
        let mut transitions = Vec::with_capacity(n);
        for (t, (obs, code, action, log_pi, next_obs, reward, done)) in
            steps.into_iter().enumerate()
        {
            let next_code = if t + 1 < n {
                None // filled below from the following step's code
            } else {
                Some(final_code.clone())
            };
            transitions.push(Transition {
                state: obs,
                action,
                code: Some(code),
                next_state: next_obs,
                next_code,
                log_pi,
                reward: EvalOnlyReward::new(reward),
                done,
            });
        }
        for t in 0..n.saturating_sub(1) {
            let c = transitions[t + 1].code.clone();
            transitions[t].next_code = c;
        }

        total += n;
        trajectories.push(Trajectory {
            scenario,
            transitions,
            ground_truth_subtasks: Some(labels),
        });
    }
    Ok(trajectories)
}
