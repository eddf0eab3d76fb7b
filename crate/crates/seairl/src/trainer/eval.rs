//! Greedy evaluation. This is the only place the environment's true
//! reward is read.

use rand_chacha::ChaCha8Rng;

use crate::envs::{Action, ActionSpace, Done, Env, EnvState};
use crate::latent::{initial_code, posterior_logits, SubTaskCode};
use crate::nn::Network;
use crate::Result;

#[derive(Debug, Clone, Default)]
pub struct EvalSummary {
    pub per_scenario: Vec<f64>,
    pub success: f64,
    pub mean_return: f64,
    pub mean_length: f64,
}

/// Roll episodes with an arbitrary action selector; success is reaching
/// the scenario's final sub-goal in order (a terminated episode).
pub fn evaluate_actions<F>(
    env: &Env,
    mut select: F,
    episodes_per_scenario: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EvalSummary>
where
    F: FnMut(&Env, &EnvState) -> Result<Action>,
{
    let n_scen = env.spec.scenarios.len();
    let mut per_scenario = Vec::with_capacity(n_scen);
    let mut total_return = 0.0;
    let mut total_len = 0usize;
    let episodes = episodes_per_scenario.max(1);
    for scenario in 0..n_scen {
        let mut ok = 0usize;
        for _ in 0..episodes {
            let mut state = env.reset(scenario, rng)?;
            loop {
                let action = select(env, &state)?;
                let step = env.step(&state, &action)?;
                total_return += step.reward;
                total_len += 1;
                state = step.next;
                match step.done {
                    Done::No => {}
                    Done::Terminated => {
                        ok += 1;
                        break;
                    }
                    Done::Truncated => break,
                }
            }
        }
        per_scenario.push(ok as f64 / episodes as f64);
    }
    let n_episodes = (episodes * n_scen) as f64;
    Ok(EvalSummary {
        success: per_scenario.iter().sum::<f64>() / n_scen as f64,
        per_scenario,
        mean_return: total_return / n_episodes,
        mean_length: total_len as f64 / n_episodes,
    })
}

/// Greedy policy evaluation: argmax code along the posterior chain,
/// argmax action (discrete) or mean action (continuous).
pub fn evaluate(
    env: &Env,
    policy: &Network,
    posterior: &Network,
    k: usize,
    episodes_per_scenario: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EvalSummary> {
    let space = env.spec.action_space();
    let a_dim = space.encoded_dim();
    // the code chain is episode state; track it across select() calls
    let mut c_prev = initial_code(k);
    let mut a_prev = Action::null_encoding(a_dim);

    evaluate_actions(
        env,
        move |env, state| {
            if state.step_index() == 0 {
                c_prev = initial_code(k);
                a_prev = Action::null_encoding(a_dim);
            }
            let obs = env.observe(state);
            let logits = posterior_logits(posterior, c_prev.probs(), &obs, &a_prev)?;
            let mut best = 0;
            for (i, &l) in logits.iter().enumerate() {
                if l > logits[best] {
                    best = i;
                }
            }
            let code = SubTaskCode::one_hot(best, k);

            let mut input = obs;
            input.extend_from_slice(code.probs());
            let out = policy.eval(&input)?;
            let action = match space {
                ActionSpace::Discrete(_) => {
                    let mut arg = 0;
                    for (i, &l) in out.iter().enumerate() {
                        if l > out[arg] {
                            arg = i;
                        }
                    }
                    Action::Discrete(arg)
                }
                ActionSpace::Continuous(d) => Action::Continuous(out[..d].to_vec()),
            };
            c_prev = code;
            a_prev = action.encode(a_dim);
            Ok(action)
        },
        episodes_per_scenario,
        rng,
    )
}
