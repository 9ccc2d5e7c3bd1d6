//! Uniform-random baseline agent. Learns nothing; useful for smoke runs and
//! as a sanity opponent in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::AgentCheckpoint;
use crate::error::AgentError;
use crate::game::TurnOutcome;

use super::{AgentKind, EnvStep, TurnAgent};

#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> RandomAgent {
        RandomAgent {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl TurnAgent for RandomAgent {
    fn act(
        &mut self,
        _observation: &[f64],
        legal: &[usize],
        env: &mut EnvStep<'_>,
    ) -> Result<TurnOutcome, AgentError> {
        if legal.is_empty() {
            return Err(AgentError::NoLegalAction);
        }
        let action = legal[self.rng.random_range(0..legal.len())];
        Ok(env(action)?)
    }

    fn kind(&self) -> AgentKind {
        AgentKind::Random
    }

    fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint::Random
    }
}
