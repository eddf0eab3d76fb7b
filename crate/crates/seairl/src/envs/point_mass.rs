//! Continuous point-mass environment with sequential goal regions.
//!
//! The agent moves in the unit square under velocity actions clipped to
//! the infinity-norm ball. Sub-task inventory: region indices 0..3; the
//! required event is *entering* the required region (crossing from outside
//! to inside), so visit order matters. Like the grid, the observation
//! carries the layout and the instruction but no visit history.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::types::{Action, Done, ScenarioId};
use super::{encode_instruction, EnvSpec, EnvState, StepResult, INVENTORY};
use crate::Result;

pub const DT: f64 = 0.1;
pub const RADIUS: f64 = 0.12;

#[derive(Debug, Clone, PartialEq)]
pub struct PointMassState {
    pub pos: [f64; 2],
    pub regions: [[f64; 2]; INVENTORY],
    /// Whether the agent is currently inside each region, for entry
    /// detection.
    pub inside: [bool; INVENTORY],
    pub progress: usize,
    pub t: usize,
    pub scenario: ScenarioId,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(super) fn reset(scenario: ScenarioId, rng: &mut ChaCha8Rng) -> PointMassState {
    let mut regions = [[0.0; 2]; INVENTORY];
    for i in 0..INVENTORY {
        loop {
            let c = [rng.random_range(0.15..0.85), rng.random_range(0.15..0.85)];
            if regions[..i].iter().all(|r| dist(*r, c) >= 0.3) {
                regions[i] = c;
                break;
            }
        }
    }
    let pos = loop {
        let p = [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)];
        if regions.iter().all(|r| dist(*r, p) >= RADIUS + 0.08) {
            break p;
        }
    };
    PointMassState {
        pos,
        regions,
        inside: [false; INVENTORY],
        progress: 0,
        t: 0,
        scenario,
    }
}

pub(super) fn step(spec: &EnvSpec, s: &PointMassState, action: &[f64]) -> Result<StepResult> {
    let scenario = &spec.scenarios[s.scenario];
    let mut next = s.clone();
    // out-of-range continuous actions are clipped, not rejected
    let ax = action.first().copied().unwrap_or(0.0).clamp(-1.0, 1.0);
    let ay = action.get(1).copied().unwrap_or(0.0).clamp(-1.0, 1.0);
    next.pos[0] = (s.pos[0] + DT * ax).clamp(0.0, 1.0);
    next.pos[1] = (s.pos[1] + DT * ay).clamp(0.0, 1.0);

    let mut event = None;
    for r in 0..INVENTORY {
        let now_inside = dist(next.pos, next.regions[r]) <= RADIUS;
        if now_inside && !s.inside[r] {
            event = Some(r);
        }
        next.inside[r] = now_inside;
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
    Ok(StepResult { next: EnvState::Point(next), reward, done, event })
}

pub(super) fn observe(spec: &EnvSpec, s: &PointMassState) -> Vec<f64> {
    let mut out = Vec::with_capacity(super::STATE_DIM);
    out.push(s.pos[0]);
    out.push(s.pos[1]);
    for r in &s.regions {
        out.push(r[0]);
        out.push(r[1]);
    }
    encode_instruction(&spec.scenarios[s.scenario], &mut out);
    out
}

pub(super) fn expert_action(spec: &EnvSpec, s: &PointMassState) -> Action {
    let scenario = &spec.scenarios[s.scenario];
    let required = scenario[s.progress.min(scenario.len() - 1)];
    if spec.detour[s.scenario] && s.t % 2 == 1 {
        return Action::Continuous(vec![0.0, 0.0]);
    }
    let target = s.regions[required];
    let (mut dx, mut dy) = (target[0] - s.pos[0], target[1] - s.pos[1]);
    if s.inside[required] {
        // already inside without an entry event: back out and re-enter
        dx = -dx;
        dy = -dy;
    }
    Action::Continuous(vec![(dx / DT).clamp(-1.0, 1.0), (dy / DT).clamp(-1.0, 1.0)])
}
