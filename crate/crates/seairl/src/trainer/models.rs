//! The learned networks of a run, initialized in a fixed order from one
//! seed stream so every ablation variant with the same K starts from
//! identical parameters.

use crate::envs::{ActionSpace, EnvSpec};
use crate::latent::posterior_spec;
use crate::nn::{Checkpoint, MlpSpec, Network, OutputHead};
use crate::Result;

#[derive(Debug, Clone)]
pub struct Models {
    /// `(s ++ c) -> action distribution` (logits or Gaussian head).
    pub policy: Network,
    /// `(s ++ c) -> V`, the PPO baseline.
    pub value: Network,
    /// `(s ++ a ++ c) -> r`.
    pub reward: Network,
    /// `(s ++ c) -> Phi`.
    pub potential: Network,
    /// Frozen copy of the potential, refreshed on sync.
    pub potential_target: Network,
    /// `(s ++ c ++ s') -> action prediction`.
    pub inverse: Network,
    /// `(c_prev ++ s ++ a_prev) -> K logits`.
    pub posterior: Network,
    /// Flat `(s ++ a) -> logit` discriminator for the unshaped variants.
    pub gail_disc: Network,
}

impl Models {
    pub fn init(env: &EnvSpec, k: usize, hidden: &[usize], seed: u64) -> Result<Models> {
        let s = env.state_dim();
        let a = env.action_space().encoded_dim();
        let (policy_out, policy_head, inverse_out) = match env.action_space() {
            ActionSpace::Discrete(n) => (n, OutputHead::Linear, n),
            ActionSpace::Continuous(d) => (2 * d, OutputHead::GaussianMeanLogStd, d),
        };
        let mut rng = crate::rng::seeded(seed, crate::rng::stream::INIT);
        let policy = Network::init(
            MlpSpec::with_hidden(s + k, hidden, policy_out, policy_head)?,
            &mut rng,
        );
        let value = Network::init(
            MlpSpec::with_hidden(s + k, hidden, 1, OutputHead::Linear)?,
            &mut rng,
        );
        let reward = Network::init(
            MlpSpec::with_hidden(s + a + k, hidden, 1, OutputHead::Linear)?,
            &mut rng,
        );
        let potential = Network::init(
            MlpSpec::with_hidden(s + k, hidden, 1, OutputHead::Linear)?,
            &mut rng,
        );
        let potential_target = potential.clone();
        let inverse = Network::init(
            MlpSpec::with_hidden(s + k + s, hidden, inverse_out, OutputHead::Linear)?,
            &mut rng,
        );
        let posterior = Network::init(posterior_spec(s, a, k, hidden)?, &mut rng);
        let gail_disc = Network::init(
            MlpSpec::with_hidden(s + a, hidden, 1, OutputHead::Linear)?,
            &mut rng,
        );
        Ok(Models {
            policy,
            value,
            reward,
            potential,
            potential_target,
            inverse,
            posterior,
            gail_disc,
        })
    }

    /// Refresh the frozen potential copy.
    pub fn sync_target(&mut self) {
        self.potential_target = self.potential.clone();
    }

    pub fn k(&self) -> usize {
        self.posterior.spec.output_width()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.insert("policy", self.policy.clone());
        ck.insert("value", self.value.clone());
        ck.insert("reward", self.reward.clone());
        ck.insert("potential", self.potential.clone());
        ck.insert("potential_target", self.potential_target.clone());
        ck.insert("inverse", self.inverse.clone());
        ck.insert("posterior", self.posterior.clone());
        ck.insert("gail_disc", self.gail_disc.clone());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Models> {
        Ok(Models {
            policy: ck.get("policy")?.clone(),
            value: ck.get("value")?.clone(),
            reward: ck.get("reward")?.clone(),
            potential: ck.get("potential")?.clone(),
            potential_target: ck.get("potential_target")?.clone(),
            inverse: ck.get("inverse")?.clone(),
            posterior: ck.get("posterior")?.clone(),
            gail_disc: ck.get("gail_disc")?.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_checkpoint_round_trips() {
        let env = EnvSpec::grid_two_scenario();
        let a = Models::init(&env, 3, &[64, 64], 7).unwrap();
        let b = Models::init(&env, 3, &[64, 64], 7).unwrap();
        assert_eq!(a.policy.params.values(), b.policy.params.values());
        assert_eq!(a.posterior.params.values(), b.posterior.params.values());

        let ck = a.to_checkpoint();
        let text = ck.to_text();
        let back = Models::from_checkpoint(&Checkpoint::from_text(&text).unwrap()).unwrap();
        assert_eq!(back.reward.params.values(), a.reward.params.values());
        assert_eq!(back.potential_target.params.values(), a.potential_target.params.values());
    }

    #[test]
    fn target_sync_copies_potential() {
        let env = EnvSpec::grid_two_scenario();
        let mut m = Models::init(&env, 2, &[8], 1).unwrap();
        m.potential.params.values_mut()[0] = 123.0;
        assert_ne!(m.potential.params.values(), m.potential_target.params.values());
        m.sync_target();
        assert_eq!(m.potential.params.values(), m.potential_target.params.values());
    }
}
