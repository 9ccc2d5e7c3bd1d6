//! Versioned agent persistence.
//!
//! A checkpoint file is a single JSON document: `{ "version": 1, "agent":
//! { "kind": ..., ... } }`. Learned state travels whole (networks, the
//! episodic dictionary, schedule counters); replay buffers are recorded as
//! capacity plus length only, since their contents are cheap to regenerate
//! and dominate the file size otherwise.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{EpsilonSchedule, LambdaMode};
use crate::dnd::DndStore;
use crate::error::CheckpointError;
use crate::nn::DenseNet;

/// Current file format version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Learned state of a double-DQN agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DdqnSnapshot {
    pub online: DenseNet,
    pub target: DenseNet,
    pub schedule: EpsilonSchedule,
    pub gamma: f64,
    pub tau: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Informational: how full the replay was at save time.
    pub replay_len: usize,
}

/// Learned state of the episodic-hybrid agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct N2dSnapshot {
    pub dqn: DenseNet,
    pub embed: DenseNet,
    pub dnd: DndStore,
    pub schedule: EpsilonSchedule,
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub n_step: usize,
    pub change_step: u64,
    pub nec_steps: u64,
    pub turn: u64,
    pub lambda_mode: LambdaMode,
    pub replay_d_capacity: usize,
    pub replay_e_capacity: usize,
    pub replay_d_len: usize,
    pub replay_e_len: usize,
}

/// Agent state as written to disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AgentCheckpoint {
    Ddqn(Box<DdqnSnapshot>),
    N2d(Box<N2dSnapshot>),
    Random,
}

impl AgentCheckpoint {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AgentCheckpoint::Ddqn(_) => "ddqn",
            AgentCheckpoint::N2d(_) => "n2d",
            AgentCheckpoint::Random => "random",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    agent: AgentCheckpoint,
}

/// Write one agent checkpoint as pretty JSON.
pub fn save(path: &Path, agent: &AgentCheckpoint) -> Result<(), CheckpointError> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        agent: agent.clone(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    fs::write(path, json).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read a checkpoint, rejecting unknown versions.
pub fn load(path: &Path) -> Result<AgentCheckpoint, CheckpointError> {
    let raw = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: CheckpointFile =
        serde_json::from_str(&raw).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    if file.version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            found: file.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    Ok(file.agent)
}
