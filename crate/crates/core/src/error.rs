//! Error types, one per subsystem.
//!
//! Fallible operations return `Result` with the subsystem's error; nothing in
//! the library panics on bad input. The CLI maps usage problems to exit code 1
//! and any of these runtime errors to exit code 2.

use thiserror::Error;

/// Config parsing and validation failures, and malformed state encodings.
#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("failed to read topology config: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse topology config: {0}")]
    Parse(String),
    #[error("unsupported topology schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("subnets must partition the host range, one switch each: {0}")]
    SubnetShape(String),
    #[error("link endpoint out of range: {0}")]
    LinkEndpoint(String),
    #[error("duplicate link declared: {0}")]
    DuplicateLink(String),
    #[error("host {0} has no access link to its subnet switch")]
    MissingHostLink(usize),
    #[error("switch {0} has no trunk link to the router")]
    MissingTrunkLink(usize),
    #[error("critical server id {0} out of range")]
    CriticalServerRange(usize),
    #[error("backup hosts invalid: {0}")]
    BackupHosts(String),
    #[error("initially compromised set invalid: {0}")]
    InitiallyCompromised(String),
    #[error("s_max must equal the host count {expected}, got {found}")]
    SMax { expected: i64, found: i64 },
    #[error("state shape does not match topology: {0}")]
    StateShape(String),
}

/// Rule violations and out-of-band calls against a game session.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("action index {index} out of range for {role} (limit {limit})")]
    ActionIndex {
        role: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("it is not the {0}'s turn")]
    WrongTurn(&'static str),
    #[error("game is already over")]
    GameOver,
    #[error("turn cap per agent must be at least 1")]
    ZeroTurnCap,
}

/// Shape mismatches and non-finite values in network math.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("input width {found} does not match layer width {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("action index {index} out of range for output width {width}")]
    OutputIndex { index: usize, width: usize },
    #[error("gradient shape does not match network shape")]
    GradientShape,
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("network needs at least one layer")]
    Empty,
    #[error("tau must lie in [0, 1], got {0}")]
    TauRange(f64),
    #[error("networks have different shapes")]
    ShapeMismatch,
}

/// Replay buffer misuse.
#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("cannot sample from an empty buffer")]
    Empty,
    #[error("buffer capacity must be nonzero")]
    ZeroCapacity,
}

/// Episodic store misuse: bad shapes, bad action ids, empty lookups.
#[derive(Debug, Error)]
pub enum DndError {
    #[error("invalid store parameter: {0}")]
    Config(&'static str),
    #[error("key width {found} does not match store width {expected}")]
    KeyWidth { expected: usize, found: usize },
    #[error("action {index} out of range ({limit} actions)")]
    ActionRange { index: usize, limit: usize },
    #[error("lookup on empty memory for action {0}")]
    EmptyAction(usize),
    #[error("n-step return needs at least one reward")]
    EmptyRewards,
    #[error("{0} must be finite")]
    NonFinite(&'static str),
}

/// Agent-level failures; mostly propagated from the layers below.
#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Dnd(#[from] DndError),
    #[error("no legal action available")]
    NoLegalAction,
    #[error("observation width {found} does not match agent width {expected}")]
    ObservationWidth { expected: usize, found: usize },
    #[error("invalid agent configuration: {0}")]
    Config(&'static str),
}

/// Statistics preconditions: sample sizes, matched lengths, degenerate data.
#[derive(Debug, Error)]
pub enum StatsError {
    #[error("paired samples must have equal length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("samples are degenerate: {0}")]
    Degenerate(&'static str),
    #[error("{name} must lie in (0, 1), got {value}")]
    ProbabilityRange { name: &'static str, value: f64 },
    #[error("{0} must be finite")]
    NonFinite(&'static str),
}

/// Experiment harness failures: IO, malformed rows, bad options.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed results row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("series needs at least one run")]
    NoRuns,
    #[error("turn budget must be nonzero")]
    ZeroTurnBudget,
    #[error("game id must be 1 or 2, got {0}")]
    GameId(u8),
    #[error("agent finished its turn without applying an action")]
    NoAction,
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Plot emission failures.
#[derive(Debug, Error)]
pub enum PlotError {
    #[error("nothing to plot: input has no run records")]
    Empty,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unrecognized input format: {0}")]
    Format(String),
}

/// Checkpoint save/load failures.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
}
