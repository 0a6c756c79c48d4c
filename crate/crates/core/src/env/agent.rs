//! Agent clients bundled with the environment.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fold::{Assignment, Point};
use crate::kernel::PAPER_SIZE;

use super::action::{AgentAction, CreaseSpec};
use super::Observation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("agent transport failed: {0}")]
    Transport(String),
}

/// Receives an observation, answers with raw text or `None` to stop.
pub trait Agent {
    fn act(&mut self, obs: &Observation) -> Result<Option<String>, AgentError>;
}

/// Never acts.
pub struct NullAgent;

impl Agent for NullAgent {
    fn act(&mut self, _obs: &Observation) -> Result<Option<String>, AgentError> {
        Ok(None)
    }
}

/// Replays fixed texts in order, then stops.
#[derive(Clone, Debug)]
pub struct ScriptedAgent {
    queue: VecDeque<String>,
}

impl ScriptedAgent {
    pub fn new(texts: impl IntoIterator<Item = String>) -> Self {
        ScriptedAgent {
            queue: texts.into_iter().collect(),
        }
    }

    pub fn from_actions(actions: &[AgentAction]) -> Self {
        ScriptedAgent::new(actions.iter().map(AgentAction::to_command))
    }
}

impl Agent for ScriptedAgent {
    fn act(&mut self, _obs: &Observation) -> Result<Option<String>, AgentError> {
        Ok(self.queue.pop_front())
    }
}

/// Seeded baseline: single creases between two random points on
/// different sides of the square, snapped to a half-unit grid.
#[derive(Clone, Debug)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn boundary_point(&mut self, side: u8) -> Point {
        let t = self.rng.random_range(0..=20) as f64 * 0.5;
        match side {
            0 => [t, 0.0],
            1 => [PAPER_SIZE, t],
            2 => [t, PAPER_SIZE],
            _ => [0.0, t],
        }
    }

    pub fn next_action(&mut self) -> AgentAction {
        let s1 = self.rng.random_range(0..4u8);
        let s2 = (s1 + self.rng.random_range(1..4u8)) % 4;
        let p1 = self.boundary_point(s1);
        let p2 = self.boundary_point(s2);
        let a = if self.rng.random_bool(0.5) {
            Assignment::M
        } else {
            Assignment::V
        };
        AgentAction::single(CreaseSpec::points(p1, p2, a))
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, _obs: &Observation) -> Result<Option<String>, AgentError> {
        Ok(Some(self.next_action().to_command()))
    }
}
