//! Simulator and agents for a turn-based attacker/defender game played on a
//! small software-defined network, plus the experiment harness and statistics
//! used to compare agent pairings across repeated runs.
//!
//! The crate is organized around a few layers:
//!
//! * [`topology`] declares the network (hosts, switches, router, links),
//!   validates configs, and encodes network state as the flat numeric
//!   observation both agents consume.
//! * [`game`] holds the turn-based rules: action decoding, legality, rewards,
//!   the zero-sum scoreboard, and win conditions.
//! * [`nn`], [`memory`], and [`dnd`] are the learning substrate: a dense
//!   network with manual backprop, replay buffers, and the per-action episodic
//!   store with kernel-weighted lookup.
//! * [`agents`] implements the two learners (double DQN and the
//!   episodic-memory hybrid) plus a uniform-random baseline behind one trait.
//! * [`experiment`], [`stats`], and [`plot`] run seeded series of games,
//!   aggregate per-run records, and compare pairings with Student-t tests.
//!
//! Everything is deterministic under a fixed seed: seeded ChaCha streams,
//! ordered containers in every serialized path, and plain-text artifacts.

pub mod agents;
pub mod checkpoint;
pub mod dnd;
pub mod error;
pub mod experiment;
pub mod game;
pub mod memory;
pub mod nn;
pub mod plot;
pub mod stats;
pub mod topology;

pub use error::{
    AgentError, CheckpointError, DndError, ExperimentError, GameError, MemoryError, NnError,
    PlotError, StatsError, TopologyError,
};
