//! The two empowerment losses over function approximators.
//!
//! `inverse_loss` trains the hierarchical inverse model: mean squared
//! error on the predicted action for continuous spaces (the inverse model
//! is a unit-variance Gaussian over actions), negative log-likelihood for
//! discrete ones. `empowerment_reg_loss` pulls `log pi(a|s,c) + Phi(s,c)`
//! toward `log Omega(a|s,c,s')` with the inverse model held constant; it
//! trains the policy and the potential.

use crate::envs::Action;
use crate::nn::heads::{
    categorical_log_prob, categorical_log_prob_grad, gaussian_log_prob, gaussian_log_prob_grads,
    log_softmax, LN_2PI,
};
use crate::nn::{floor_log_prob, Network, LOG_PROB_FLOOR};
use crate::{Error, Result};

/// One `(s, c, a, s')` sample. An empty `code` slice drops the sub-task
/// conditioning entirely (the single-task degenerate case).
#[derive(Debug, Clone, Copy)]
pub struct EmpowermentSample<'a> {
    pub state: &'a [f64],
    pub code: &'a [f64],
    pub action: &'a Action,
    pub next_state: &'a [f64],
}

impl<'a> EmpowermentSample<'a> {
    fn inverse_input(&self) -> Vec<f64> {
        let mut v =
            Vec::with_capacity(self.state.len() + self.code.len() + self.next_state.len());
        v.extend_from_slice(self.state);
        v.extend_from_slice(self.code);
        v.extend_from_slice(self.next_state);
        v
    }

    fn policy_input(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.state.len() + self.code.len());
        v.extend_from_slice(self.state);
        v.extend_from_slice(self.code);
        v
    }
}

/// Inverse-model loss over a batch. Continuous: `|a_hat - a|^2` summed over
/// dims, meaned over the batch. Discrete: mean NLL of the taken action
/// under the model's categorical output. Accumulates gradients when a
/// buffer is given.
pub fn inverse_loss(
    inverse: &Network,
    batch: &[EmpowermentSample],
    mut grads: Option<&mut [f64]>,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::config("empty inverse-loss batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for sample in batch {
        let input = sample.inverse_input();
        match &sample.action {
            Action::Continuous(a) => {
                let (out, tape) = inverse.forward(&input)?;
                let mut upstream = vec![0.0; out.len()];
                for d in 0..a.len() {
                    let diff = out[d] - a[d];
                    loss += diff * diff * scale;
                    upstream[d] = 2.0 * diff * scale;
                }
                if let Some(buf) = grads.as_deref_mut() {
                    inverse.backward_into(tape, &upstream, buf)?;
                }
            }
            Action::Discrete(a) => {
                let (logits, tape) = inverse.forward(&input)?;
                let lp = categorical_log_prob(&logits, *a);
                if lp < LOG_PROB_FLOOR {
                    loss += -LOG_PROB_FLOOR * scale;
                } else {
                    loss += -lp * scale;
                    if let Some(buf) = grads.as_deref_mut() {
                        let g = categorical_log_prob_grad(&logits, *a);
                        let upstream: Vec<f64> = g.into_iter().map(|x| -scale * x).collect();
                        inverse.backward_into(tape, &upstream, buf)?;
                    }
                }
            }
        }
    }
    Ok(loss)
}

/// `log Omega(a | s, c, s')` with the current inverse model, floored.
/// Continuous inverse models are unit-variance Gaussians around the
/// predicted action.
pub fn log_omega(inverse: &Network, sample: &EmpowermentSample) -> Result<f64> {
    let out = inverse.eval(&sample.inverse_input())?;
    let lp = match &sample.action {
        Action::Discrete(a) => log_softmax(&out)[*a],
        Action::Continuous(a) => {
            let mut acc = 0.0;
            for d in 0..a.len() {
                let diff = out[d] - a[d];
                acc += -0.5 * diff * diff - 0.5 * LN_2PI;
            }
            acc
        }
    };
    Ok(floor_log_prob(lp))
}

/// Policy log-density and its gradient with respect to the policy network
/// output, honoring the global floor (zero gradient below it).
fn policy_log_prob(
    out: &[f64],
    action: &Action,
) -> (f64, Option<Vec<f64>>) {
    match action {
        Action::Discrete(a) => {
            let lp = categorical_log_prob(out, *a);
            if lp < LOG_PROB_FLOOR {
                (LOG_PROB_FLOOR, None)
            } else {
                (lp, Some(categorical_log_prob_grad(out, *a)))
            }
        }
        Action::Continuous(a) => {
            let d = out.len() / 2;
            let (mean, log_std) = out.split_at(d);
            let lp = gaussian_log_prob(mean, log_std, a);
            if lp < LOG_PROB_FLOOR {
                (LOG_PROB_FLOOR, None)
            } else {
                let (dm, ds) = gaussian_log_prob_grads(mean, log_std, a);
                let mut g = dm;
                g.extend(ds);
                (lp, Some(g))
            }
        }
    }
}

/// Empowerment regularizer: mean of
/// `(log Omega(a|s,c,s') - log pi(a|s,c) - Phi(s,c))^2` over the batch.
/// `log Omega` is a constant target (no gradient reaches the inverse
/// model); gradients flow to the policy and the potential when buffers are
/// given.
pub fn empowerment_reg_loss(
    policy: &Network,
    potential: &Network,
    inverse: &Network,
    batch: &[EmpowermentSample],
    mut policy_grads: Option<&mut [f64]>,
    mut potential_grads: Option<&mut [f64]>,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::config("empty empowerment-regularizer batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for sample in batch {
        let target = log_omega(inverse, sample)?;

        let policy_in = sample.policy_input();
        let (policy_out, policy_tape) = policy.forward(&policy_in)?;
        let (log_pi, log_pi_grad) = policy_log_prob(&policy_out, sample.action);

        let (phi_out, phi_tape) = potential.forward(&policy_in)?;
        let phi = phi_out[0];

        let resid = target - (log_pi + phi);
        loss += resid * resid * scale;
        let d_resid = -2.0 * resid * scale;

        if let (Some(buf), Some(g)) = (policy_grads.as_deref_mut(), &log_pi_grad) {
            let upstream: Vec<f64> = g.iter().map(|x| d_resid * x).collect();
            policy.backward_into(policy_tape, &upstream, buf)?;
        }
        if let Some(buf) = potential_grads.as_deref_mut() {
            potential.backward_into(phi_tape, &[d_resid], buf)?;
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, MlpSpec, OutputHead, Params};
    use crate::rng::seeded;

    fn sample_batch_continuous(n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Action>, Vec<Vec<f64>>) {
        let mut rng = seeded(40, 0);
        use rand::Rng;
        let states: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let codes: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0, 0.0]).collect();
        let actions: Vec<Action> = (0..n)
            .map(|_| Action::Continuous(vec![rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9)]))
            .collect();
        let next: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        (states, codes, actions, next)
    }

    fn build_batch<'a>(
        states: &'a [Vec<f64>],
        codes: &'a [Vec<f64>],
        actions: &'a [Action],
        next: &'a [Vec<f64>],
    ) -> Vec<EmpowermentSample<'a>> {
        (0..states.len())
            .map(|i| EmpowermentSample {
                state: &states[i],
                code: &codes[i],
                action: &actions[i],
                next_state: &next[i],
            })
            .collect()
    }

    #[test]
    fn perfect_prediction_zero_loss() {
        // inverse net with zero weights predicts 0; actions are 0
        let spec = MlpSpec::new(vec![10, 2], crate::nn::Activation::Tanh, OutputHead::Linear)
            .unwrap();
        let inverse = Network { params: Params::zeros(&spec), spec };
        let states = vec![vec![0.1, 0.2, 0.3, 0.4]];
        let codes = vec![vec![1.0, 0.0]];
        let actions = vec![Action::Continuous(vec![0.0, 0.0])];
        let next = vec![vec![0.5, 0.6, 0.7, 0.8]];
        let batch = build_batch(&states, &codes, &actions, &next);
        let loss = inverse_loss(&inverse, &batch, None).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn unit_offset_gives_loss_d() {
        // zero net predicts the zero vector; actions of all ones give
        // squared error d
        let spec = MlpSpec::new(vec![10, 3], crate::nn::Activation::Tanh, OutputHead::Linear)
            .unwrap();
        let inverse = Network { params: Params::zeros(&spec), spec };
        let states = vec![vec![0.0; 4]];
        let codes = vec![vec![1.0, 0.0]];
        let actions = vec![Action::Continuous(vec![1.0, 1.0, 1.0])];
        let next = vec![vec![0.0; 4]];
        let batch = build_batch(&states, &codes, &actions, &next);
        let loss = inverse_loss(&inverse, &batch, None).unwrap();
        assert!((loss - 3.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_loss_gradients_pass_fd_continuous() {
        let (states, codes, actions, next) = sample_batch_continuous(6);
        let batch = build_batch(&states, &codes, &actions, &next);
        let spec = MlpSpec::with_hidden(10, &[8], 2, OutputHead::Linear).unwrap();
        let net = Network::init(spec, &mut seeded(41, 0));
        let mut grads = net.grad_buffer();
        inverse_loss(&net, &batch, Some(&mut grads)).unwrap();
        let err = grad_check(net.params.values(), &grads, 1e-6, |v| {
            let n2 = Network {
                spec: net.spec.clone(),
                params: Params::from_values(&net.spec, v.to_vec()).unwrap(),
            };
            inverse_loss(&n2, &batch, None).unwrap()
        });
        assert!(err < 1e-4, "continuous inverse loss grad error {err}");
    }

    #[test]
    fn inverse_loss_gradients_pass_fd_discrete() {
        let mut rng = seeded(42, 0);
        use rand::Rng;
        let states: Vec<Vec<f64>> =
            (0..6).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let codes: Vec<Vec<f64>> = (0..6).map(|_| vec![0.0, 1.0]).collect();
        let actions: Vec<Action> = (0..6).map(|_| Action::Discrete(rng.random_range(0..3))).collect();
        let next: Vec<Vec<f64>> =
            (0..6).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let batch = build_batch(&states, &codes, &actions, &next);
        let spec = MlpSpec::with_hidden(10, &[8], 3, OutputHead::Linear).unwrap();
        let net = Network::init(spec, &mut seeded(43, 0));
        let mut grads = net.grad_buffer();
        inverse_loss(&net, &batch, Some(&mut grads)).unwrap();
        let err = grad_check(net.params.values(), &grads, 1e-6, |v| {
            let n2 = Network {
                spec: net.spec.clone(),
                params: Params::from_values(&net.spec, v.to_vec()).unwrap(),
            };
            inverse_loss(&n2, &batch, None).unwrap()
        });
        assert!(err < 1e-4, "discrete inverse loss grad error {err}");
    }

    /// With zero-weight networks everything is constant: log pi is
    /// -ln|A|, log Omega is -ln|A|, and Phi is the output bias. Setting
    /// the bias to 0 gives residual 0; setting it to -delta gives loss
    /// delta^2.
    #[test]
    fn regularizer_constant_offset_cases() {
        let k = 1;
        let state_dim = 4;
        let n_actions = 3;
        let policy_spec =
            MlpSpec::new(vec![state_dim + k, n_actions], crate::nn::Activation::Tanh, OutputHead::Linear)
                .unwrap();
        let policy = Network { params: Params::zeros(&policy_spec), spec: policy_spec };
        let inv_spec = MlpSpec::new(
            vec![state_dim + k + state_dim, n_actions],
            crate::nn::Activation::Tanh,
            OutputHead::Linear,
        )
        .unwrap();
        let inverse = Network { params: Params::zeros(&inv_spec), spec: inv_spec };
        let pot_spec =
            MlpSpec::new(vec![state_dim + k, 1], crate::nn::Activation::Tanh, OutputHead::Linear)
                .unwrap();
        let mut potential = Network { params: Params::zeros(&pot_spec), spec: pot_spec };

        let states = vec![vec![0.3, -0.2, 0.9, 0.1]; 4];
        let codes = vec![vec![1.0]; 4];
        let actions = vec![
            Action::Discrete(0),
            Action::Discrete(1),
            Action::Discrete(2),
            Action::Discrete(1),
        ];
        let next = vec![vec![0.0, 0.4, -0.6, 0.2]; 4];
        let batch = build_batch(&states, &codes, &actions, &next);

        let zero = empowerment_reg_loss(&policy, &potential, &inverse, &batch, None, None).unwrap();
        assert!(zero.abs() < 1e-24, "expected zero loss, got {zero}");

        let delta = 0.75;
        let n = potential.params.len();
        potential.params.values_mut()[n - 1] = -delta;
        let off = empowerment_reg_loss(&policy, &potential, &inverse, &batch, None, None).unwrap();
        assert!((off - delta * delta).abs() < 1e-12);
    }

    #[test]
    fn regularizer_gradients_pass_fd() {
        let mut rng = seeded(44, 0);
        let (states, codes, actions, next) = sample_batch_continuous(5);
        let batch = build_batch(&states, &codes, &actions, &next);
        let policy = Network::init(
            MlpSpec::with_hidden(6, &[8], 4, OutputHead::GaussianMeanLogStd).unwrap(),
            &mut rng,
        );
        let potential =
            Network::init(MlpSpec::with_hidden(6, &[8], 1, OutputHead::Linear).unwrap(), &mut rng);
        let inverse =
            Network::init(MlpSpec::with_hidden(10, &[8], 2, OutputHead::Linear).unwrap(), &mut rng);

        let mut pg = policy.grad_buffer();
        let mut fg = potential.grad_buffer();
        empowerment_reg_loss(&policy, &potential, &inverse, &batch, Some(&mut pg), Some(&mut fg))
            .unwrap();

        let policy_err = grad_check(policy.params.values(), &pg, 1e-6, |v| {
            let p2 = Network {
                spec: policy.spec.clone(),
                params: Params::from_values(&policy.spec, v.to_vec()).unwrap(),
            };
            empowerment_reg_loss(&p2, &potential, &inverse, &batch, None, None).unwrap()
        });
        assert!(policy_err < 1e-4, "policy grad error {policy_err}");

        let pot_err = grad_check(potential.params.values(), &fg, 1e-6, |v| {
            let f2 = Network {
                spec: potential.spec.clone(),
                params: Params::from_values(&potential.spec, v.to_vec()).unwrap(),
            };
            empowerment_reg_loss(&policy, &f2, &inverse, &batch, None, None).unwrap()
        });
        assert!(pot_err < 1e-4, "potential grad error {pot_err}");
    }

    /// Appending a constant-one code input is exactly equivalent to a net
    /// without the code input whose first-layer bias absorbs the code
    /// column: the single-code case reduces to the unconditioned losses.
    #[test]
    fn single_code_reduces_to_unconditioned_losses() {
        let state_dim = 3;
        let mut rng = seeded(45, 0);
        let with_code =
            Network::init(MlpSpec::with_hidden(state_dim + 1 + state_dim, &[6], 2, OutputHead::Linear).unwrap(), &mut rng);

        // fold the code column (index state_dim) into the bias
        let in_dim = state_dim + 1 + state_dim;
        let hidden = 6;
        let stripped_spec =
            MlpSpec::with_hidden(state_dim + state_dim, &[6], 2, OutputHead::Linear).unwrap();
        let mut values = Vec::new();
        let src = with_code.params.values();
        // first layer weights minus the code column
        for row in 0..hidden {
            for col in 0..in_dim {
                if col != state_dim {
                    values.push(src[row * in_dim + col]);
                }
            }
        }
        // first layer bias + code column
        for row in 0..hidden {
            values.push(src[hidden * in_dim + row] + src[row * in_dim + state_dim]);
        }
        // remaining layers unchanged
        values.extend_from_slice(&src[(in_dim + 1) * hidden..]);
        let stripped = Network {
            params: Params::from_values(&stripped_spec, values).unwrap(),
            spec: stripped_spec,
        };

        let states = vec![vec![0.2, -0.5, 0.8], vec![0.0, 0.3, -0.1]];
        let one = vec![vec![1.0]; 2];
        let empty: Vec<Vec<f64>> = vec![vec![]; 2];
        let actions = vec![Action::Continuous(vec![0.4, -0.2]), Action::Continuous(vec![0.0, 0.1])];
        let next = vec![vec![0.1, 0.1, 0.1], vec![-0.2, 0.6, 0.0]];

        let coded = build_batch(&states, &one, &actions, &next);
        let plain = build_batch(&states, &empty, &actions, &next);

        let a = inverse_loss(&with_code, &coded, None).unwrap();
        let b = inverse_loss(&stripped, &plain, None).unwrap();
        assert_eq!(a, b, "single-code loss must equal code-free loss exactly");
    }
}
