//! Core data model: transitions, trajectories, demonstration sets.

use crate::latent::SubTaskCode;
use crate::{Error, Result};

pub type ScenarioId = usize;

/// An action in either environment family.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    /// Encode for network input: one-hot for discrete actions, the raw
    /// vector for continuous ones. `dim` is the action-space dimension.
    pub fn encode(&self, dim: usize) -> Vec<f64> {
        match self {
            Action::Discrete(a) => {
                let mut v = vec![0.0; dim];
                v[*a] = 1.0;
                v
            }
            Action::Continuous(v) => v.clone(),
        }
    }

    /// The null token standing in for "no previous action" at episode
    /// starts: a zero vector of the encoded width.
    pub fn null_encoding(dim: usize) -> Vec<f64> {
        vec![0.0; dim]
    }
}

/// Episode-end flag. Reaching the final sub-goal terminates (value
/// bootstrap zero); hitting the step cap truncates (bootstrap from the
/// value function).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Done {
    No,
    Terminated,
    Truncated,
}

impl Done {
    pub fn is_episode_end(self) -> bool {
        self != Done::No
    }
}

/// The environment's true reward, visible to evaluation only. Keeping it
/// behind this wrapper makes any read in a learner loss stand out: the
/// sole accessor is [`EvalOnlyReward::for_evaluation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOnlyReward(f64);

impl EvalOnlyReward {
    pub fn new(r: f64) -> Self {
        EvalOnlyReward(r)
    }

    /// Read the true reward. Call sites outside evaluation code are audit
    /// findings.
    pub fn for_evaluation(&self) -> f64 {
        self.0
    }
}

/// One time step. Expert demonstrations carry `code: None` at rest; the
/// posterior attaches codes later.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub code: Option<SubTaskCode>,
    pub next_state: Vec<f64>,
    pub next_code: Option<SubTaskCode>,
    /// Log-density of `action` under the behavior policy at collection
    /// time; 0 for scripted expert data.
    pub log_pi: f64,
    pub reward: EvalOnlyReward,
    pub done: Done,
}

/// A variable-length episode.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scenario: ScenarioId,
    pub transitions: Vec<Transition>,
    /// Per-step true sub-task labels, for evaluation only.
    pub ground_truth_subtasks: Option<Vec<usize>>,
}

impl Trajectory {
    /// Consecutive transitions must chain exactly: `next_state[t] ==
    /// state[t+1]`.
    pub fn check_chain(&self) -> Result<()> {
        for (t, pair) in self.transitions.windows(2).enumerate() {
            if pair[0].next_state != pair[1].state {
                return Err(Error::format(format!(
                    "trajectory breaks the state chain at step {t}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// Recorded expert demonstrations, tied to the environment they came from
/// by a fingerprint of its spec.
#[derive(Debug, Clone)]
pub struct DemoSet {
    pub trajectories: Vec<Trajectory>,
    pub fingerprint: u64,
    pub seed: u64,
}

impl DemoSet {
    pub fn total_transitions(&self) -> usize {
        self.trajectories.iter().map(|t| t.len()).sum()
    }
}
