//! Turn-based zero-sum game between an attacker and a defender on the
//! simulated network.
//!
//! The attacker picks one host per turn to compromise; the defender isolates
//! and patches hosts, reconnects them, migrates the critical server to a
//! backup, or passes. Points live on a fixed-total scoreboard: ground taken
//! moves a point to the attacker, ground recovered moves it back. The
//! attacker moves first and turns strictly alternate until a win condition
//! fires or both sides exhaust the per-agent turn cap (ties at the cap go to
//! the defender).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::topology::{attack_frontier, encode, NetworkState, TopologyConfig};

/// The two sides of the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Attacker,
    Defender,
}

impl Role {
    pub fn opponent(self) -> Role {
        match self {
            Role::Attacker => Role::Defender,
            Role::Defender => Role::Attacker,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Attacker => "attacker",
            Role::Defender => "defender",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A decoded move. Action indices map to forms per role:
///
/// * attacker: index `h` is `Compromise(h)`, one per host;
/// * defender: `0..H` is `IsolatePatch(h)`, `H..2H` is `Reconnect(h)`,
///   `2H..2H+3` is `Migrate(backup slot)`, and the final index is `NoOp`.
///
/// Under the default 32-host config that is 32 attacker actions and 68
/// defender actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameAction {
    Compromise(usize),
    IsolatePatch(usize),
    Reconnect(usize),
    Migrate(usize),
    NoOp,
}

/// Number of action indices available to `role` under `cfg`.
pub fn action_count(role: Role, cfg: &TopologyConfig) -> usize {
    match role {
        Role::Attacker => cfg.host_count(),
        Role::Defender => 2 * cfg.host_count() + cfg.backup_hosts().len() + 1,
    }
}

impl GameAction {
    /// Decode an action index for `role`. Total and bijective over the range.
    pub fn from_index(
        role: Role,
        index: usize,
        cfg: &TopologyConfig,
    ) -> Result<GameAction, GameError> {
        let limit = action_count(role, cfg);
        if index >= limit {
            return Err(GameError::ActionIndex {
                role: role.name(),
                index,
                limit,
            });
        }
        let h = cfg.host_count();
        Ok(match role {
            Role::Attacker => GameAction::Compromise(index),
            Role::Defender => {
                if index < h {
                    GameAction::IsolatePatch(index)
                } else if index < 2 * h {
                    GameAction::Reconnect(index - h)
                } else if index < 2 * h + cfg.backup_hosts().len() {
                    GameAction::Migrate(index - 2 * h)
                } else {
                    GameAction::NoOp
                }
            }
        })
    }

    /// Inverse of [`GameAction::from_index`] for the action's own role.
    pub fn to_index(self, cfg: &TopologyConfig) -> usize {
        let h = cfg.host_count();
        match self {
            GameAction::Compromise(host) => host,
            GameAction::IsolatePatch(host) => host,
            GameAction::Reconnect(host) => h + host,
            GameAction::Migrate(slot) => 2 * h + slot,
            GameAction::NoOp => 2 * h + cfg.backup_hosts().len(),
        }
    }
}

/// Fixed-total score split. The two sides always sum to the config's `s_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scoreboard {
    pub defender: i64,
    pub attacker: i64,
}

/// What a single step returns to the acting agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome {
    /// Reward for the acting side: attacker in {-1, 1}, defender in {-1, 0, 1}.
    pub reward: i32,
    /// Observation encoded from the state immediately after the action.
    pub next_observation: Vec<f64>,
    pub done: bool,
    pub winner: Option<Role>,
    /// Defender turns played so far, including this one if the defender moved.
    pub defender_turns_so_far: u64,
}

/// One line of the per-turn JSONL log. `turn` counts all turns of both sides,
/// starting at 1 with the attacker's first move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnEvent {
    pub turn: u64,
    pub role: Role,
    pub action_index: usize,
    pub reward: i32,
    pub defender_score: i64,
    pub attacker_score: i64,
    pub done: bool,
    pub winner: Option<Role>,
}

/// A single game in progress. Owns its state; the config is shared.
#[derive(Debug, Clone)]
pub struct GameSession {
    cfg: Arc<TopologyConfig>,
    state: NetworkState,
    scoreboard: Scoreboard,
    to_move: Role,
    turn_cap_per_agent: u64,
    attacker_turns: u64,
    defender_turns: u64,
    total_turns: u64,
    winner: Option<Role>,
}

impl GameSession {
    /// Start a fresh game: initial network state, scoreboard at
    /// `(s_max, 0)`, attacker to move.
    pub fn new(cfg: Arc<TopologyConfig>, turn_cap_per_agent: u64) -> Result<GameSession, GameError> {
        if turn_cap_per_agent == 0 {
            return Err(GameError::ZeroTurnCap);
        }
        let state = NetworkState::initial(&cfg);
        let scoreboard = Scoreboard {
            defender: cfg.s_max(),
            attacker: 0,
        };
        Ok(GameSession {
            cfg,
            state,
            scoreboard,
            to_move: Role::Attacker,
            turn_cap_per_agent,
            attacker_turns: 0,
            defender_turns: 0,
            total_turns: 0,
            winner: None,
        })
    }

    pub fn config(&self) -> &Arc<TopologyConfig> {
        &self.cfg
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn scoreboard(&self) -> Scoreboard {
        self.scoreboard
    }

    pub fn to_move(&self) -> Role {
        self.to_move
    }

    pub fn winner(&self) -> Option<Role> {
        self.winner
    }

    pub fn is_done(&self) -> bool {
        self.winner.is_some()
    }

    pub fn attacker_turns(&self) -> u64 {
        self.attacker_turns
    }

    pub fn defender_turns(&self) -> u64 {
        self.defender_turns
    }

    pub fn total_turns(&self) -> u64 {
        self.total_turns
    }

    pub fn turn_cap_per_agent(&self) -> u64 {
        self.turn_cap_per_agent
    }

    /// Current observation vector.
    pub fn observation(&self) -> Vec<f64> {
        // The session constructs its state from its own config, so the shape
        // always matches.
        encode(&self.state, &self.cfg).expect("session state matches its config")
    }

    /// Action indices `role` may choose right now: the attacker gets one
    /// index per frontier host; the defender gets every index except
    /// migrations to currently compromised backups.
    pub fn legal_actions(&self, role: Role) -> Result<Vec<usize>, GameError> {
        if self.winner.is_some() {
            return Err(GameError::GameOver);
        }
        if role != self.to_move {
            return Err(GameError::WrongTurn(role.name()));
        }
        Ok(match role {
            Role::Attacker => self.frontier().into_iter().collect(),
            Role::Defender => {
                let h = self.cfg.host_count();
                let mut legal: Vec<usize> = (0..2 * h).collect();
                for (slot, &backup) in self.cfg.backup_hosts().iter().enumerate() {
                    if !self.state.is_compromised(backup) {
                        legal.push(2 * h + slot);
                    }
                }
                legal.push(2 * h + self.cfg.backup_hosts().len());
                legal.sort_unstable();
                legal
            }
        })
    }

    /// Apply one action for `role` and alternate the turn.
    ///
    /// Any well-formed index is accepted; actions whose precondition fails
    /// (compromising an unreachable host, migrating onto a compromised
    /// backup) are pure penalties: reward -1 and no state change. Win
    /// conditions are evaluated after every step.
    pub fn step(&mut self, role: Role, action_index: usize) -> Result<TurnOutcome, GameError> {
        if self.winner.is_some() {
            return Err(GameError::GameOver);
        }
        if role != self.to_move {
            return Err(GameError::WrongTurn(role.name()));
        }
        let action = GameAction::from_index(role, action_index, &self.cfg)?;

        let reward = match action {
            GameAction::Compromise(h) => {
                if !self.state.is_compromised(h) && self.frontier().contains(&h) {
                    self.state.set_compromised(h, true);
                    self.state.set_flag(h);
                    self.scoreboard.defender -= 1;
                    self.scoreboard.attacker += 1;
                    1
                } else {
                    -1
                }
            }
            GameAction::IsolatePatch(h) => {
                // Isolation always cuts the host's links; patching only has
                // something to clean on a compromised host.
                self.state.set_host_links(&self.cfg, h, false);
                if self.state.is_compromised(h) {
                    self.state.set_compromised(h, false);
                    self.state.clear_flag(h);
                    self.scoreboard.attacker -= 1;
                    self.scoreboard.defender += 1;
                    1
                } else {
                    -1
                }
            }
            GameAction::Reconnect(h) => {
                self.state.set_host_links(&self.cfg, h, true);
                0
            }
            GameAction::Migrate(slot) => {
                let backup = self.cfg.backup_hosts()[slot];
                if self.state.is_compromised(backup) {
                    -1
                } else {
                    self.state.set_server_at(backup);
                    0
                }
            }
            GameAction::NoOp => 0,
        };

        self.total_turns += 1;
        match role {
            Role::Attacker => self.attacker_turns += 1,
            Role::Defender => self.defender_turns += 1,
        }
        self.to_move = role.opponent();
        self.winner = self.check_winner();

        Ok(TurnOutcome {
            reward,
            next_observation: self.observation(),
            done: self.winner.is_some(),
            winner: self.winner,
            defender_turns_so_far: self.defender_turns,
        })
    }

    /// Evaluate the win conditions against the current position.
    ///
    /// Attacker wins when the host carrying the critical server is
    /// compromised, or when its score exceeds the defender's. Defender wins
    /// when no compromised host remains, when the attack frontier is empty,
    /// or when both sides have used their turn cap without the attacker
    /// being ahead.
    pub fn check_winner(&self) -> Option<Role> {
        if self.state.is_compromised(self.state.server_at())
            || self.scoreboard.attacker > self.scoreboard.defender
        {
            return Some(Role::Attacker);
        }
        let cap_reached = self.attacker_turns >= self.turn_cap_per_agent
            && self.defender_turns >= self.turn_cap_per_agent;
        if self.state.compromised_count() == 0
            || self.frontier().is_empty()
            || (cap_reached && self.scoreboard.defender >= self.scoreboard.attacker)
        {
            return Some(Role::Defender);
        }
        None
    }

    fn frontier(&self) -> std::collections::BTreeSet<usize> {
        attack_frontier(&self.state, &self.cfg).expect("session state matches its config")
    }
}
