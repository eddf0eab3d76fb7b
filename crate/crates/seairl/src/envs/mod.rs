//! Toy multi-task environments with scripted experts.
//!
//! Both environments pose *sequential* tasks: a scenario is an ordering of
//! sub-tasks from a fixed inventory, and an episode succeeds when the
//! required events fire in the required order. The observation carries the
//! scenario's instruction (the ordering itself) and the static task layout
//! but *not* the progress through it — tracking progress is exactly what
//! the sub-task code machinery is for. The environment's true reward
//! exists only behind [`EvalOnlyReward`]; learners never see it.

mod demo_io;
mod grid;
mod point_mass;
mod types;

pub use demo_io::{load_demos, save_demos};
pub use grid::GridState;
pub use point_mass::PointMassState;
pub use types::{
    Action, DemoSet, Done, EvalOnlyReward, ScenarioId, Trajectory, Transition,
};

use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Number of sub-tasks in each environment's inventory, and the number of
/// instruction slots encoded in the observation.
pub const INVENTORY: usize = 3;
pub const INSTRUCTION_SLOTS: usize = 3;

/// Observation width shared by both environment kinds: 8 layout values
/// plus `INSTRUCTION_SLOTS x INVENTORY` instruction one-hots.
pub const STATE_DIM: usize = 8 + INSTRUCTION_SLOTS * INVENTORY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    GridPickupDeliver,
    PointMassGoals,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::GridPickupDeliver => "grid_pickup_deliver",
            EnvKind::PointMassGoals => "point_mass_goals",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "grid_pickup_deliver" => Ok(EnvKind::GridPickupDeliver),
            "point_mass_goals" => Ok(EnvKind::PointMassGoals),
            other => Err(Error::config(format!("unknown env kind `{other}`"))),
        }
    }
}

/// Discrete(n) or Continuous(dim) action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous(usize),
}

impl ActionSpace {
    /// Width of the encoded action fed to networks.
    pub fn encoded_dim(self) -> usize {
        match self {
            ActionSpace::Discrete(n) => n,
            ActionSpace::Continuous(d) => d,
        }
    }
}

/// Environment configuration: which family, which scenarios (sub-task
/// orderings), the episode cap, and which scenarios' experts pad their
/// paths (used to skew demonstration scales).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub scenarios: Vec<Vec<usize>>,
    pub episode_cap: usize,
    pub detour: Vec<bool>,
}

impl EnvSpec {
    pub fn new(kind: EnvKind, scenarios: Vec<Vec<usize>>, episode_cap: usize) -> Result<Self> {
        let detour = vec![false; scenarios.len()];
        let spec = EnvSpec { kind, scenarios, episode_cap, detour };
        spec.validate()?;
        Ok(spec)
    }

    /// The grid environment used throughout the tests and the book:
    /// scenario 0 is reach-object then carry-to-goal, scenario 1 presses
    /// the switch first.
    pub fn grid_two_scenario() -> EnvSpec {
        EnvSpec::new(
            EnvKind::GridPickupDeliver,
            vec![vec![0, 1], vec![2, 0, 1]],
            64,
        )
        .unwrap()
    }

    /// Reorderings of the same inventory for transfer runs.
    pub fn grid_transfer_scenarios() -> EnvSpec {
        EnvSpec::new(
            EnvKind::GridPickupDeliver,
            vec![vec![0, 1, 2], vec![0, 2, 1]],
            64,
        )
        .unwrap()
    }

    pub fn point_mass_two_scenario() -> EnvSpec {
        EnvSpec::new(EnvKind::PointMassGoals, vec![vec![0, 1], vec![1, 2]], 128).unwrap()
    }

    pub fn with_detour(mut self, scenario: ScenarioId) -> Self {
        self.detour[scenario] = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::config("env needs at least one scenario"));
        }
        if self.detour.len() != self.scenarios.len() {
            return Err(Error::config("detour flags must match scenario count"));
        }
        for (i, sc) in self.scenarios.iter().enumerate() {
            if sc.is_empty() || sc.len() > INSTRUCTION_SLOTS {
                return Err(Error::config(format!(
                    "scenario {i} must order between 1 and {INSTRUCTION_SLOTS} sub-tasks"
                )));
            }
            if sc.iter().any(|&s| s >= INVENTORY) {
                return Err(Error::config(format!(
                    "scenario {i} names a sub-task outside the inventory 0..{INVENTORY}"
                )));
            }
            let mut seen = [false; INVENTORY];
            for &s in sc {
                if seen[s] {
                    return Err(Error::config(format!(
                        "scenario {i} repeats sub-task {s}"
                    )));
                }
                seen[s] = true;
            }
        }
        if self.episode_cap == 0 {
            return Err(Error::config("episode cap must be positive"));
        }
        Ok(())
    }

    /// Multi-task training additionally requires at least two scenarios.
    pub fn validate_multi_task(&self) -> Result<()> {
        self.validate()?;
        if self.scenarios.len() < 2 {
            return Err(Error::config("multi-task runs need at least 2 scenarios"));
        }
        Ok(())
    }

    /// Canonical text form, the input to [`EnvSpec::fingerprint`].
    pub fn canonical_string(&self) -> String {
        let scen: Vec<String> = self
            .scenarios
            .iter()
            .map(|s| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        let detour: Vec<String> = self.detour.iter().map(|d| (*d as u8).to_string()).collect();
        format!(
            "kind={};scenarios={};cap={};detour={}",
            self.kind.name(),
            scen.join(";"),
            self.episode_cap,
            detour.join(",")
        )
    }

    /// FNV-1a over the canonical string; stable across platforms and
    /// compiler versions.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.canonical_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    pub fn action_space(&self) -> ActionSpace {
        match self.kind {
            EnvKind::GridPickupDeliver => ActionSpace::Discrete(grid::ACTIONS),
            EnvKind::PointMassGoals => ActionSpace::Continuous(2),
        }
    }

    pub fn state_dim(&self) -> usize {
        STATE_DIM
    }
}

/// Instruction encoding shared by both environments: one one-hot block per
/// instruction slot, zero-padded past the scenario length.
pub(crate) fn encode_instruction(scenario: &[usize], out: &mut Vec<f64>) {
    for slot in 0..INSTRUCTION_SLOTS {
        for k in 0..INVENTORY {
            let on = slot < scenario.len() && scenario[slot] == k;
            out.push(if on { 1.0 } else { 0.0 });
        }
    }
}

/// A stateless environment handle; episode state lives in [`EnvState`].
#[derive(Debug, Clone)]
pub struct Env {
    pub spec: EnvSpec,
}

/// Physical episode state for either environment family.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    Grid(GridState),
    Point(PointMassState),
}

impl EnvState {
    pub fn scenario(&self) -> ScenarioId {
        match self {
            EnvState::Grid(s) => s.scenario,
            EnvState::Point(s) => s.scenario,
        }
    }

    pub fn step_index(&self) -> usize {
        match self {
            EnvState::Grid(s) => s.t,
            EnvState::Point(s) => s.t,
        }
    }

    pub fn progress(&self) -> usize {
        match self {
            EnvState::Grid(s) => s.progress,
            EnvState::Point(s) => s.progress,
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub next: EnvState,
    /// True reward: +1 whenever the required sub-goal fires. Evaluation
    /// only.
    pub reward: f64,
    pub done: Done,
    /// The sub-task event that fired this step, if any (whether or not it
    /// matched the required one).
    pub event: Option<usize>,
}

impl Env {
    pub fn new(spec: EnvSpec) -> Result<Env> {
        spec.validate()?;
        Ok(Env { spec })
    }

    pub fn reset(&self, scenario: ScenarioId, rng: &mut ChaCha8Rng) -> Result<EnvState> {
        if scenario >= self.spec.scenarios.len() {
            return Err(Error::config(format!(
                "unknown scenario {scenario} (env has {})",
                self.spec.scenarios.len()
            )));
        }
        Ok(match self.spec.kind {
            EnvKind::GridPickupDeliver => EnvState::Grid(grid::reset(scenario, rng)),
            EnvKind::PointMassGoals => EnvState::Point(point_mass::reset(scenario, rng)),
        })
    }

    pub fn step(&self, state: &EnvState, action: &Action) -> Result<StepResult> {
        match (state, action) {
            (EnvState::Grid(s), Action::Discrete(a)) => grid::step(&self.spec, s, *a),
            (EnvState::Point(s), Action::Continuous(a)) => point_mass::step(&self.spec, s, a),
            _ => Err(Error::config("action kind does not match environment kind")),
        }
    }

    pub fn observe(&self, state: &EnvState) -> Vec<f64> {
        match state {
            EnvState::Grid(s) => grid::observe(&self.spec, s),
            EnvState::Point(s) => point_mass::observe(&self.spec, s),
        }
    }

    /// Scripted expert action for the state's current sub-task.
    pub fn expert_action(&self, state: &EnvState) -> Action {
        match state {
            EnvState::Grid(s) => grid::expert_action(&self.spec, s),
            EnvState::Point(s) => point_mass::expert_action(&self.spec, s),
        }
    }

    /// The inventory id of the sub-task currently being pursued: the true
    /// label for segmentation scoring.
    pub fn current_subtask(&self, state: &EnvState) -> usize {
        let sc = &self.spec.scenarios[state.scenario()];
        sc[state.progress().min(sc.len() - 1)]
    }

    /// Roll the scripted expert for one episode.
    pub fn expert_episode(&self, scenario: ScenarioId, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
        let mut state = self.reset(scenario, rng)?;
        let mut transitions = Vec::new();
        let mut labels = Vec::new();
        loop {
            let action = self.expert_action(&state);
            labels.push(self.current_subtask(&state));
            let obs = self.observe(&state);
            let step = self.step(&state, &action)?;
            transitions.push(Transition {
                state: obs,
                action,
                code: None,
                next_state: self.observe(&step.next),
                next_code: None,
                log_pi: 0.0,
                reward: EvalOnlyReward::new(step.reward),
                done: step.done,
            });
            state = step.next;
            if step.done.is_episode_end() {
                break;
            }
        }
        Ok(Trajectory {
            scenario,
            transitions,
            ground_truth_subtasks: Some(labels),
        })
    }

    /// Record `n_per_scenario` expert episodes for every scenario.
    pub fn record_demos(&self, n_per_scenario: usize, seed: u64) -> Result<DemoSet> {
        if n_per_scenario == 0 {
            return Err(Error::config("need at least one demo per scenario"));
        }
        let mut rng = crate::rng::seeded(seed, crate::rng::stream::DEMOS);
        let mut trajectories = Vec::new();
        for scenario in 0..self.spec.scenarios.len() {
            for _ in 0..n_per_scenario {
                trajectories.push(self.expert_episode(scenario, &mut rng)?);
            }
        }
        Ok(DemoSet { trajectories, fingerprint: self.spec.fingerprint(), seed })
    }
}
