//! 5x5 pick-and-deliver grid.
//!
//! Sub-task inventory: 0 = reach-object (grasp the object at its cell),
//! 1 = carry-to-goal (release while carrying on the goal cell),
//! 2 = press-switch (enter the switch cell). A sub-goal event only counts
//! when it is the next one the scenario requires, so orderings genuinely
//! matter: an out-of-order event is wasted and must be redone in order.
//!
//! The observation reports the task layout (agent, object spawn, goal and
//! switch cells) plus the scenario instruction. It does not report the
//! carried/pressed flags or the live object position; progress through the
//! scenario is hidden state the learner must track through its sub-task
//! codes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::types::{Action, Done, ScenarioId};
use super::{encode_instruction, EnvSpec, EnvState, StepResult};
use crate::{Error, Result};

pub const SIDE: i32 = 5;
/// up, down, left, right, grasp, release
pub const ACTIONS: usize = 6;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const GRASP: usize = 4;
pub const RELEASE: usize = 5;

pub const REACH_OBJECT: usize = 0;
pub const CARRY_TO_GOAL: usize = 1;
pub const PRESS_SWITCH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridState {
    pub agent: (i32, i32),
    /// Live object position; follows the agent while carried.
    pub object: (i32, i32),
    /// Where the object started; this is what the observation reports.
    pub spawn: (i32, i32),
    pub goal: (i32, i32),
    pub switch: (i32, i32),
    pub carried: bool,
    pub pressed: bool,
    /// How many required sub-goals have fired, in order.
    pub progress: usize,
    pub t: usize,
    pub scenario: ScenarioId,
}

fn random_cell(rng: &mut ChaCha8Rng) -> (i32, i32) {
    (rng.random_range(0..SIDE), rng.random_range(0..SIDE))
}

pub(super) fn reset(scenario: ScenarioId, rng: &mut ChaCha8Rng) -> GridState {
    let agent = random_cell(rng);
    let object = loop {
        let c = random_cell(rng);
        if c != agent {
            break c;
        }
    };
    let goal = loop {
        let c = random_cell(rng);
        if c != agent && c != object {
            break c;
        }
    };
    let switch = loop {
        let c = random_cell(rng);
        if c != agent && c != object && c != goal {
            break c;
        }
    };
    GridState {
        agent,
        object,
        spawn: object,
        goal,
        switch,
        carried: false,
        pressed: false,
        progress: 0,
        t: 0,
        scenario,
    }
}

pub(super) fn step(spec: &EnvSpec, s: &GridState, action: usize) -> Result<StepResult> {
    if action >= ACTIONS {
        return Err(Error::config(format!(
            "discrete action {action} out of range 0..{ACTIONS}"
        )));
    }
    let scenario = &spec.scenarios[s.scenario];
    let mut next = s.clone();
    let mut event = None;

    match action {
        UP | DOWN | LEFT | RIGHT => {
            let (dx, dy) = match action {
                UP => (0, 1),
                DOWN => (0, -1),
                LEFT => (-1, 0),
                _ => (1, 0),
            };
            let target = (
                (s.agent.0 + dx).clamp(0, SIDE - 1),
                (s.agent.1 + dy).clamp(0, SIDE - 1),
            );
            let moved = target != s.agent;
            next.agent = target;
            if next.carried {
                next.object = next.agent;
            }
            if moved && next.agent == next.switch {
                next.pressed = true;
                event = Some(PRESS_SWITCH);
            }
        }
        GRASP => {
            if !s.carried && s.agent == s.object {
                next.carried = true;
                event = Some(REACH_OBJECT);
            }
        }
        _ => {
            // release
            if s.carried {
                next.carried = false;
                next.object = next.agent;
                if next.agent == next.goal {
                    event = Some(CARRY_TO_GOAL);
                }
            }
        }
    }

    let mut reward = 0.0;
    if next.progress < scenario.len() && event == Some(scenario[next.progress]) {
        next.progress += 1;
        reward = 1.0;
    }
    next.t += 1;
    let done = if next.progress == scenario.len() {
        Done::Terminated
    } else if next.t >= spec.episode_cap {
        Done::Truncated
    } else {
        Done::No
    };
    Ok(StepResult { next: EnvState::Grid(next), reward, done, event })
}

pub(super) fn observe(spec: &EnvSpec, s: &GridState) -> Vec<f64> {
    let norm = (SIDE - 1) as f64;
    let mut out = Vec::with_capacity(super::STATE_DIM);
    for (x, y) in [s.agent, s.spawn, s.goal, s.switch] {
        out.push(x as f64 / norm);
        out.push(y as f64 / norm);
    }
    encode_instruction(&spec.scenarios[s.scenario], &mut out);
    out
}

fn step_toward(from: (i32, i32), to: (i32, i32)) -> usize {
    if from.0 < to.0 {
        RIGHT
    } else if from.0 > to.0 {
        LEFT
    } else if from.1 < to.1 {
        UP
    } else {
        DOWN
    }
}

/// Deterministic expert. In detour mode it interleaves no-op actions
/// (grasp while carrying, release while not) so episodes take twice as
/// many steps without changing the path.
pub(super) fn expert_action(spec: &EnvSpec, s: &GridState) -> Action {
    let scenario = &spec.scenarios[s.scenario];
    let required = scenario[s.progress.min(scenario.len() - 1)];
    let waiting = spec.detour[s.scenario] && s.t % 2 == 1;
    let a = match required {
        REACH_OBJECT => {
            if waiting {
                RELEASE
            } else if s.agent == s.object {
                GRASP
            } else {
                step_toward(s.agent, s.object)
            }
        }
        CARRY_TO_GOAL => {
            if !s.carried {
                // recover the object first
                if s.agent == s.object {
                    GRASP
                } else {
                    step_toward(s.agent, s.object)
                }
            } else if waiting {
                GRASP
            } else if s.agent == s.goal {
                RELEASE
            } else {
                step_toward(s.agent, s.goal)
            }
        }
        _ => {
            // press-switch
            if waiting {
                if s.carried {
                    GRASP
                } else {
                    RELEASE
                }
            } else if s.agent == s.switch {
                // pressing fires on entry; step off so we can re-enter
                if s.agent.0 > 0 {
                    LEFT
                } else {
                    RIGHT
                }
            } else {
                step_toward(s.agent, s.switch)
            }
        }
    };
    Action::Discrete(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Env;

    fn base_state() -> GridState {
        GridState {
            agent: (2, 2),
            object: (4, 4),
            spawn: (4, 4),
            goal: (0, 0),
            switch: (0, 4),
            carried: false,
            pressed: false,
            progress: 0,
            t: 0,
            scenario: 0,
        }
    }

    fn env() -> Env {
        Env::new(EnvSpec::grid_two_scenario()).unwrap()
    }

    fn grid(step: StepResult) -> (GridState, f64, Done, Option<usize>) {
        let EnvState::Grid(g) = step.next else { unreachable!() };
        (g, step.reward, step.done, step.event)
    }

    #[test]
    fn wall_moves_leave_position_unchanged() {
        let env = env();
        let mut s = base_state();
        s.agent = (0, 0);
        s.goal = (3, 3); // keep landmarks off the corner
        s.switch = (1, 3);
        let (after_left, ..) = grid(step(&env.spec, &s, LEFT).unwrap());
        assert_eq!(after_left.agent, (0, 0));
        let (after_down, ..) = grid(step(&env.spec, &s, DOWN).unwrap());
        assert_eq!(after_down.agent, (0, 0));
    }

    /// Hand-written transition table for the 5x5 instance: each row is
    /// (mutation of the base state, action, expected carried, expected
    /// agent, expected object, expected event).
    #[test]
    fn transition_table_oracle() {
        let env = env();
        type Mut = fn(&mut GridState);
        let cases: Vec<(Mut, usize, bool, (i32, i32), (i32, i32), Option<usize>)> = vec![
            // grasp away from the object: no-op
            (|_s| {}, GRASP, false, (2, 2), (4, 4), None),
            // grasp on the object cell: picks it up
            (|s| s.agent = (4, 4), GRASP, true, (4, 4), (4, 4), Some(REACH_OBJECT)),
            // grasp while already carrying: no-op, no event
            (
                |s| {
                    s.agent = (3, 3);
                    s.object = (3, 3);
                    s.carried = true;
                },
                GRASP,
                true,
                (3, 3),
                (3, 3),
                None,
            ),
            // carried object follows a move
            (
                |s| {
                    s.object = (2, 2);
                    s.carried = true;
                },
                RIGHT,
                true,
                (3, 2),
                (3, 2),
                None,
            ),
            // release while not carrying: no-op
            (|_s| {}, RELEASE, false, (2, 2), (4, 4), None),
            // release off-goal drops the object in place
            (
                |s| {
                    s.object = (2, 2);
                    s.carried = true;
                },
                RELEASE,
                false,
                (2, 2),
                (2, 2),
                None,
            ),
            // release on the goal delivers
            (
                |s| {
                    s.agent = (0, 0);
                    s.object = (0, 0);
                    s.carried = true;
                },
                RELEASE,
                false,
                (0, 0),
                (0, 0),
                Some(CARRY_TO_GOAL),
            ),
            // stepping onto the switch presses it
            (|s| s.agent = (1, 4), LEFT, false, (0, 4), (4, 4), Some(PRESS_SWITCH)),
            // pressing into a wall while on the switch does not re-fire
            (
                |s| {
                    s.agent = (0, 4);
                    s.pressed = true;
                },
                LEFT,
                false,
                (0, 4),
                (4, 4),
                None,
            ),
            // plain move
            (|_s| {}, UP, false, (2, 3), (4, 4), None),
        ];
        for (i, (mutate, action, carried, agent, object, event)) in cases.into_iter().enumerate() {
            let mut s = base_state();
            mutate(&mut s);
            let (next, _, _, ev) = grid(step(&env.spec, &s, action).unwrap());
            assert_eq!(next.carried, carried, "case {i}: carried");
            assert_eq!(next.agent, agent, "case {i}: agent");
            assert_eq!(next.object, object, "case {i}: object");
            assert_eq!(ev, event, "case {i}: event");
        }
    }

    #[test]
    fn out_of_order_events_do_not_advance() {
        let env = Env::new(EnvSpec::grid_two_scenario()).unwrap();
        // scenario 1 requires press-switch first; grasping early is wasted
        let mut s = base_state();
        s.scenario = 1;
        s.agent = (4, 4);
        let (next, reward, _, ev) = grid(step(&env.spec, &s, GRASP).unwrap());
        assert_eq!(ev, Some(REACH_OBJECT));
        assert_eq!(next.progress, 0);
        assert_eq!(reward, 0.0);
    }

    #[test]
    fn in_order_events_advance_and_terminate() {
        let env = env();
        // scenario 0 = [reach, carry]
        let mut s = base_state();
        s.agent = (4, 4);
        let (s1, r1, d1, _) = grid(step(&env.spec, &s, GRASP).unwrap());
        assert_eq!((r1, d1), (1.0, Done::No));
        assert_eq!(s1.progress, 1);
        let mut s2 = s1;
        s2.agent = (0, 0);
        s2.object = (0, 0);
        let (s3, r2, d2, _) = grid(step(&env.spec, &s2, RELEASE).unwrap());
        assert_eq!((r2, d2), (1.0, Done::Terminated));
        assert_eq!(s3.progress, 2);
    }

    #[test]
    fn cap_truncates() {
        let env = env();
        let mut s = base_state();
        s.t = 63;
        let (_, _, done, _) = grid(step(&env.spec, &s, UP).unwrap());
        assert_eq!(done, Done::Truncated);
    }

    #[test]
    fn bad_action_is_rejected() {
        let env = env();
        assert!(step(&env.spec, &base_state(), 6).is_err());
    }

    #[test]
    fn observation_hides_progress() {
        let env = env();
        let s = base_state();
        let mut carried = s.clone();
        carried.carried = true;
        carried.object = carried.agent;
        carried.progress = 1;
        // same layout, different hidden phase: identical observations
        assert_eq!(observe(&env.spec, &s), observe(&env.spec, &carried));
        assert_eq!(observe(&env.spec, &s).len(), super::super::STATE_DIM);
    }

    #[test]
    fn expert_heads_to_object_then_goal() {
        let env = env();
        let s = base_state();
        // reach phase: move toward (4,4) from (2,2): x first
        assert_eq!(expert_action(&env.spec, &s), Action::Discrete(RIGHT));
        let mut carrying = base_state();
        carrying.carried = true;
        carrying.object = carrying.agent;
        carrying.progress = 1;
        // carry phase: head toward goal (0,0)
        assert_eq!(expert_action(&env.spec, &carrying), Action::Discrete(LEFT));
    }

    #[test]
    fn detour_expert_doubles_episode_length() {
        let plain = Env::new(EnvSpec::grid_two_scenario()).unwrap();
        let detour = Env::new(EnvSpec::grid_two_scenario().with_detour(0)).unwrap();
        let mut lens = (0usize, 0usize);
        for seed in 0..20 {
            let mut r1 = crate::rng::seeded(seed, 3);
            let mut r2 = crate::rng::seeded(seed, 3);
            lens.0 += plain.expert_episode(0, &mut r1).unwrap().len();
            lens.1 += detour.expert_episode(0, &mut r2).unwrap().len();
        }
        let ratio = lens.1 as f64 / lens.0 as f64;
        assert!(ratio > 1.6 && ratio < 2.4, "detour ratio {ratio}");
    }
}
