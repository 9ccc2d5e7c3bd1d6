//! Turn-taking agents and the pieces they share: the [`TurnAgent`] trait,
//! the linear exploration schedule, and greedy/ε-greedy selection helpers.
//!
//! An agent owns its whole turn. The game loop hands it the current
//! observation, the legal action set, and a callback that applies one action
//! to the session; the agent selects, steps, records, and learns before
//! returning the outcome. Keeping the environment behind a callback means
//! agents never hold a borrow of the session between turns.

mod ddqn;
mod n2d;
mod random;

pub use ddqn::{DdqnAgent, DdqnConfig};
pub use n2d::{LambdaMode, N2dAgent, N2dConfig};
pub use random::RandomAgent;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::AgentCheckpoint;
use crate::error::{AgentError, GameError, NnError};
use crate::game::TurnOutcome;

/// Environment hook handed to [`TurnAgent::act`]: applies one action of this
/// agent's role to the live session and reports what happened.
pub type EnvStep<'a> = dyn FnMut(usize) -> Result<TurnOutcome, GameError> + 'a;

/// One side of the game loop.
pub trait TurnAgent {
    /// Play one turn: pick an action from `legal`, apply it via `env`, store
    /// whatever the learning rule needs, and train if due.
    fn act(
        &mut self,
        observation: &[f64],
        legal: &[usize],
        env: &mut EnvStep<'_>,
    ) -> Result<TurnOutcome, AgentError>;

    /// Episode-boundary hook; agents with episodic buffers flush them here.
    fn finish_episode(&mut self) -> Result<(), AgentError> {
        Ok(())
    }

    /// Which algorithm this agent runs; used in logs and artifact names.
    fn kind(&self) -> AgentKind;

    /// Snapshot of learned state for persistence.
    fn checkpoint(&self) -> AgentCheckpoint;
}

/// Agent selector shared by the CLI and the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Ddqn,
    N2d,
    Random,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Ddqn => "ddqn",
            AgentKind::N2d => "n2d",
            AgentKind::Random => "random",
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Linear exploration schedule: `start` at step zero, falling to `end` at
/// `decay_steps`, constant afterwards. The counter persists for the life of
/// the agent, so exploration keeps decaying across runs in a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    start: f64,
    end: f64,
    decay_steps: u64,
    steps: u64,
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, decay_steps: u64) -> Result<EpsilonSchedule, AgentError> {
        let in_range = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !in_range(start) || !in_range(end) || end > start {
            return Err(AgentError::Config(
                "epsilon schedule needs 0 <= end <= start <= 1",
            ));
        }
        if decay_steps == 0 {
            return Err(AgentError::Config("epsilon decay steps must be at least 1"));
        }
        Ok(EpsilonSchedule {
            start,
            end,
            decay_steps,
            steps: 0,
        })
    }

    /// Current exploration rate.
    pub fn value(&self) -> f64 {
        if self.steps >= self.decay_steps {
            return self.end;
        }
        let frac = self.steps as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }

    /// Count one agent step.
    pub fn advance(&mut self) {
        self.steps = self.steps.saturating_add(1);
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// Argmax over every output slot, lowest index breaking ties.
pub(crate) fn argmax(q: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (a, &v) in q.iter().enumerate() {
        let better = match best {
            None => true,
            Some((_, bv)) => v > bv,
        };
        if better {
            best = Some((a, v));
        }
    }
    best.map(|(a, _)| a)
}

/// Argmax restricted to `legal`, lowest action index breaking ties
/// regardless of the order indices arrive in.
pub(crate) fn greedy(q: &[f64], legal: &[usize]) -> Result<usize, AgentError> {
    let mut best: Option<(usize, f64)> = None;
    for &a in legal {
        let v = *q.get(a).ok_or(NnError::OutputIndex {
            index: a,
            width: q.len(),
        })?;
        let better = match best {
            None => true,
            Some((ba, bv)) => v > bv || (v == bv && a < ba),
        };
        if better {
            best = Some((a, v));
        }
    }
    best.map(|(a, _)| a).ok_or(AgentError::NoLegalAction)
}

/// ε-greedy over the legal subset. Always consumes exactly one uniform draw
/// for the explore/exploit decision, so the random stream stays aligned
/// whatever ε is.
pub(crate) fn epsilon_greedy<R: Rng>(
    q: &[f64],
    legal: &[usize],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize, AgentError> {
    if legal.is_empty() {
        return Err(AgentError::NoLegalAction);
    }
    if rng.random::<f64>() < epsilon {
        Ok(legal[rng.random_range(0..legal.len())])
    } else {
        greedy(q, legal)
    }
}
