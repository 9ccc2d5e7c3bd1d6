//! Series orchestration: repeated games with persistent agents, artifact
//! emission, and the statistics helpers the command line exposes.
//!
//! A series is `runs` consecutive games under one role assignment. Game 1
//! puts the episodic-hybrid agent on defense and double DQN on attack;
//! game 2 swaps them. Agents are created once per series and keep their
//! learned state across runs; each run ends with an episode flush.
//!
//! Artifacts per series: `results.csv` (one row per run), `turns_runNN.jsonl`
//! (one event per turn), and one checkpoint per agent. All outputs are
//! byte-deterministic for a fixed seed.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{
    AgentKind, DdqnAgent, DdqnConfig, N2dAgent, N2dConfig, RandomAgent, TurnAgent,
};
use crate::checkpoint;
use crate::error::{AgentError, ExperimentError};
use crate::game::{action_count, GameSession, Role, TurnEvent};
use crate::topology::TopologyConfig;

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    /// 1-based run index within the series.
    pub run: u32,
    /// Series role assignment, 1 or 2.
    pub game: u8,
    pub winner: Role,
    /// Turns the defender took before the game ended.
    pub defender_turns: u64,
    pub defender_score: i64,
    pub attacker_score: i64,
    pub defender_reward_sum: i64,
    pub attacker_reward_sum: i64,
    /// Master seed of the series (identical on every row).
    pub seed: u64,
}

/// Aggregates of one finished game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub winner: Role,
    pub total_turns: u64,
    pub defender_turns: u64,
    pub defender_score: i64,
    pub attacker_score: i64,
    pub defender_reward_sum: i64,
    pub attacker_reward_sum: i64,
}

/// Parameters of [`run_series`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesOptions {
    /// 1: hybrid defends, DDQN attacks. 2: swapped.
    pub game_id: u8,
    pub runs: u32,
    /// Per-agent turn cap of each run.
    pub turns_per_agent: u64,
    /// Master seed; agent seeds derive from it.
    pub seed: u64,
    /// Override the attacker algorithm (`None` = game default).
    pub attacker: Option<AgentKind>,
    /// Override the defender algorithm (`None` = game default).
    pub defender: Option<AgentKind>,
}

/// Default role assignment for a game id: `(attacker, defender)`.
pub fn default_roles(game_id: u8) -> Result<(AgentKind, AgentKind), ExperimentError> {
    match game_id {
        1 => Ok((AgentKind::Ddqn, AgentKind::N2d)),
        2 => Ok((AgentKind::N2d, AgentKind::Ddqn)),
        other => Err(ExperimentError::GameId(other)),
    }
}

/// Stable per-agent seed from the series master seed. Uses the splitmix64
/// finalizer so adjacent master seeds still give unrelated streams.
pub fn derive_seed(master: u64, game_id: u8, role: Role) -> u64 {
    let tag = (u64::from(game_id) << 1)
        | match role {
            Role::Attacker => 0,
            Role::Defender => 1,
        };
    splitmix64(master ^ splitmix64(tag))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Construct an agent for one side of a series. `budget` is the planned
/// total step count (runs × turns per agent); it sizes the exploration decay
/// and the hybrid's NEC cutoff.
pub fn make_agent(
    kind: AgentKind,
    observation_len: usize,
    actions: usize,
    budget: u64,
    seed: u64,
) -> Result<Box<dyn TurnAgent>, AgentError> {
    Ok(match kind {
        AgentKind::Ddqn => Box::new(DdqnAgent::new(
            observation_len,
            actions,
            &DdqnConfig::for_budget(budget),
            seed,
        )?),
        AgentKind::N2d => Box::new(N2dAgent::new(
            observation_len,
            actions,
            &N2dConfig::for_budget(budget),
            seed,
        )?),
        AgentKind::Random => Box::new(RandomAgent::new(seed)),
    })
}

/// Play one game to completion, attacker moving first, invoking `sink` with
/// every turn event in order.
pub fn play_run(
    session: &mut GameSession,
    attacker: &mut dyn TurnAgent,
    defender: &mut dyn TurnAgent,
    mut sink: impl FnMut(&TurnEvent) -> Result<(), ExperimentError>,
) -> Result<RunSummary, ExperimentError> {
    let mut defender_reward_sum = 0i64;
    let mut attacker_reward_sum = 0i64;

    let winner = loop {
        let outcome = one_turn(session, attacker, Role::Attacker, &mut sink)?;
        attacker_reward_sum += i64::from(outcome.reward);
        if outcome.done {
            break outcome.winner;
        }
        let outcome = one_turn(session, defender, Role::Defender, &mut sink)?;
        defender_reward_sum += i64::from(outcome.reward);
        if outcome.done {
            break outcome.winner;
        }
    };
    // A finished game always has a winner: the turn cap resolves ties.
    let winner = winner.ok_or(ExperimentError::NoAction)?;

    let scores = session.scoreboard();
    Ok(RunSummary {
        winner,
        total_turns: session.total_turns(),
        defender_turns: session.defender_turns(),
        defender_score: scores.defender,
        attacker_score: scores.attacker,
        defender_reward_sum,
        attacker_reward_sum,
    })
}

fn one_turn(
    session: &mut GameSession,
    agent: &mut dyn TurnAgent,
    role: Role,
    sink: &mut impl FnMut(&TurnEvent) -> Result<(), ExperimentError>,
) -> Result<crate::game::TurnOutcome, ExperimentError> {
    let observation = session.observation();
    let legal = session.legal_actions(role)?;
    let mut chosen = None;
    let outcome = {
        let mut env = |a: usize| {
            chosen = Some(a);
            session.step(role, a)
        };
        agent.act(&observation, &legal, &mut env)?
    };
    let action_index = chosen.ok_or(ExperimentError::NoAction)?;
    let scores = session.scoreboard();
    sink(&TurnEvent {
        turn: session.total_turns(),
        role,
        action_index,
        reward: outcome.reward,
        defender_score: scores.defender,
        attacker_score: scores.attacker,
        done: outcome.done,
        winner: outcome.winner,
    })?;
    Ok(outcome)
}

/// Play a whole series and, when `out_dir` is given, write `results.csv`,
/// per-run turn logs, and both agents' checkpoints beneath it.
pub fn run_series(
    topo: &Arc<TopologyConfig>,
    opts: &SeriesOptions,
    out_dir: Option<&Path>,
) -> Result<Vec<RunRecord>, ExperimentError> {
    if opts.runs == 0 {
        return Err(ExperimentError::NoRuns);
    }
    if opts.turns_per_agent == 0 {
        return Err(ExperimentError::ZeroTurnBudget);
    }
    let (default_attacker, default_defender) = default_roles(opts.game_id)?;
    let attacker_kind = opts.attacker.unwrap_or(default_attacker);
    let defender_kind = opts.defender.unwrap_or(default_defender);

    let budget = u64::from(opts.runs) * opts.turns_per_agent;
    let observation_len = topo.observation_len();
    let mut attacker = make_agent(
        attacker_kind,
        observation_len,
        action_count(Role::Attacker, topo),
        budget,
        derive_seed(opts.seed, opts.game_id, Role::Attacker),
    )?;
    let mut defender = make_agent(
        defender_kind,
        observation_len,
        action_count(Role::Defender, topo),
        budget,
        derive_seed(opts.seed, opts.game_id, Role::Defender),
    )?;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }

    let mut records = Vec::with_capacity(opts.runs as usize);
    for run in 1..=opts.runs {
        let mut session = GameSession::new(Arc::clone(topo), opts.turns_per_agent)?;
        let summary = match out_dir {
            Some(dir) => {
                let path = dir.join(format!("turns_run{run:02}.jsonl"));
                let file = fs::File::create(&path).map_err(|source| ExperimentError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let mut writer = BufWriter::new(file);
                let io_err = |source: std::io::Error| ExperimentError::Io {
                    path: path.display().to_string(),
                    source,
                };
                let summary = play_run(
                    &mut session,
                    attacker.as_mut(),
                    defender.as_mut(),
                    |event| {
                        let line = serde_json::to_string(event)
                            .map_err(|e| ExperimentError::MalformedRow {
                                row: event.turn as usize,
                                reason: e.to_string(),
                            })?;
                        writer.write_all(line.as_bytes()).map_err(io_err)?;
                        writer.write_all(b"\n").map_err(io_err)
                    },
                )?;
                writer.flush().map_err(io_err)?;
                summary
            }
            None => play_run(&mut session, attacker.as_mut(), defender.as_mut(), |_| {
                Ok(())
            })?,
        };
        attacker.finish_episode()?;
        defender.finish_episode()?;

        records.push(RunRecord {
            run,
            game: opts.game_id,
            winner: summary.winner,
            defender_turns: summary.defender_turns,
            defender_score: summary.defender_score,
            attacker_score: summary.attacker_score,
            defender_reward_sum: summary.defender_reward_sum,
            attacker_reward_sum: summary.attacker_reward_sum,
            seed: opts.seed,
        });
    }

    if let Some(dir) = out_dir {
        write_results_csv(&records, &dir.join("results.csv"))?;
        checkpoint::save(
            &dir.join("checkpoint_attacker.json"),
            &attacker.checkpoint(),
        )?;
        checkpoint::save(
            &dir.join("checkpoint_defender.json"),
            &defender.checkpoint(),
        )?;
    }
    Ok(records)
}

/// Write run records in the fixed `results.csv` column order.
pub fn write_results_csv(records: &[RunRecord], path: &Path) -> Result<(), ExperimentError> {
    let mut writer = csv::Writer::from_path(path)?;
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush().map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Read a `results.csv` written by [`write_results_csv`].
pub fn read_results_csv(path: &Path) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<RunRecord>().enumerate() {
        let record = row.map_err(|e| ExperimentError::MalformedRow {
            row: i + 1,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Defender turn counts as the sample vector the statistical comparison
/// operates on.
pub fn defender_turns_column(records: &[RunRecord]) -> Vec<f64> {
    records.iter().map(|r| r.defender_turns as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo() -> Arc<TopologyConfig> {
        Arc::new(TopologyConfig::default_config())
    }

    fn random_series(seed: u64, runs: u32, cap: u64) -> SeriesOptions {
        SeriesOptions {
            game_id: 1,
            runs,
            turns_per_agent: cap,
            seed,
            attacker: Some(AgentKind::Random),
            defender: Some(AgentKind::Random),
        }
    }

    #[test]
    fn role_defaults_follow_the_game_id() {
        assert_eq!(
            default_roles(1).unwrap(),
            (AgentKind::Ddqn, AgentKind::N2d)
        );
        assert_eq!(
            default_roles(2).unwrap(),
            (AgentKind::N2d, AgentKind::Ddqn)
        );
        assert!(matches!(default_roles(0), Err(ExperimentError::GameId(0))));
        assert!(matches!(default_roles(3), Err(ExperimentError::GameId(3))));
    }

    #[test]
    fn seed_derivation_is_stable_and_spread() {
        let a = derive_seed(42, 1, Role::Attacker);
        assert_eq!(a, derive_seed(42, 1, Role::Attacker));
        let mut seen = vec![a];
        for (game, role) in [
            (1, Role::Defender),
            (2, Role::Attacker),
            (2, Role::Defender),
        ] {
            let s = derive_seed(42, game, role);
            assert!(!seen.contains(&s), "collision for game {game} {role:?}");
            seen.push(s);
        }
        assert_ne!(derive_seed(42, 1, Role::Attacker), derive_seed(43, 1, Role::Attacker));
    }

    #[test]
    fn play_run_terminates_and_conserves_points() {
        let topo = topo();
        let mut session = GameSession::new(Arc::clone(&topo), 60).unwrap();
        let mut attacker = RandomAgent::new(3);
        let mut defender = RandomAgent::new(4);
        let mut events = Vec::new();
        let summary = play_run(&mut session, &mut attacker, &mut defender, |e| {
            events.push(e.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(summary.total_turns, events.len() as u64);
        assert!(summary.total_turns >= 1);
        // Zero-sum scoreboard: points only move between the two sides.
        assert_eq!(
            summary.defender_score + summary.attacker_score,
            topo.s_max()
        );
        // Attacker moves first and turns alternate strictly.
        for (i, event) in events.iter().enumerate() {
            assert_eq!(event.turn, i as u64 + 1);
            let expected = if i % 2 == 0 {
                Role::Attacker
            } else {
                Role::Defender
            };
            assert_eq!(event.role, expected);
        }
        // Only the last event may be terminal, and it must be.
        assert!(events.last().unwrap().done);
        assert_eq!(events.last().unwrap().winner, Some(summary.winner));
        assert!(events[..events.len() - 1].iter().all(|e| !e.done));
        // Reward sums re-aggregate from the event stream.
        let att: i64 = events
            .iter()
            .filter(|e| e.role == Role::Attacker)
            .map(|e| i64::from(e.reward))
            .sum();
        let def: i64 = events
            .iter()
            .filter(|e| e.role == Role::Defender)
            .map(|e| i64::from(e.reward))
            .sum();
        assert_eq!(att, summary.attacker_reward_sum);
        assert_eq!(def, summary.defender_reward_sum);
    }

    #[test]
    fn series_rejects_bad_options() {
        let topo = topo();
        let mut opts = random_series(1, 0, 10);
        assert!(matches!(
            run_series(&topo, &opts, None),
            Err(ExperimentError::NoRuns)
        ));
        opts = random_series(1, 1, 0);
        assert!(matches!(
            run_series(&topo, &opts, None),
            Err(ExperimentError::ZeroTurnBudget)
        ));
        opts = random_series(1, 1, 10);
        opts.game_id = 7;
        assert!(matches!(
            run_series(&topo, &opts, None),
            Err(ExperimentError::GameId(7))
        ));
    }

    #[test]
    fn series_is_deterministic_in_memory() {
        let topo = topo();
        let opts = random_series(99, 3, 40);
        let a = run_series(&topo, &opts, None).unwrap();
        let b = run_series(&topo, &opts, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for (i, record) in a.iter().enumerate() {
            assert_eq!(record.run, i as u32 + 1);
            assert_eq!(record.game, 1);
            assert_eq!(record.seed, 99);
            if record.winner == Role::Defender {
                assert!(record.defender_turns >= 1);
            }
        }
        let c = run_series(&topo, &random_series(100, 3, 40), None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_turn_cap_resolves_immediately() {
        let topo = topo();
        let records = run_series(&topo, &random_series(5, 1, 1), None).unwrap();
        assert_eq!(records.len(), 1);
        let record = &records[0];
        // The game is over within one turn each: either the attacker ended it
        // outright or the cap tie rule decided it.
        assert!(record.defender_turns <= 1);
        if record.winner == Role::Defender {
            assert!(record.defender_score >= record.attacker_score);
        }
    }

    #[test]
    fn artifacts_round_trip_and_are_byte_stable() {
        let topo = topo();
        let opts = random_series(7, 2, 30);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let records = run_series(&topo, &opts, Some(dir_a.path())).unwrap();
        let again = run_series(&topo, &opts, Some(dir_b.path())).unwrap();
        assert_eq!(records, again);

        let read_back = read_results_csv(&dir_a.path().join("results.csv")).unwrap();
        assert_eq!(read_back, records);

        for name in ["results.csv", "turns_run01.jsonl", "turns_run02.jsonl"] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "artifact {name} differs between identical runs");
            assert!(!a.is_empty());
        }
        for name in ["checkpoint_attacker.json", "checkpoint_defender.json"] {
            assert!(dir_a.path().join(name).exists(), "{name} missing");
        }

        // Turn-log rewards re-aggregate to the recorded sums.
        let log = fs::read_to_string(dir_a.path().join("turns_run01.jsonl")).unwrap();
        let events: Vec<TurnEvent> = log
            .lines()
            .map(|line| serde_json::from_str(line).unwrap())
            .collect();
        let def: i64 = events
            .iter()
            .filter(|e| e.role == Role::Defender)
            .map(|e| i64::from(e.reward))
            .sum();
        assert_eq!(def, records[0].defender_reward_sum);
    }

    #[test]
    fn learning_agents_run_a_small_series() {
        // Tiny budget smoke test of the real matchup wiring (game 2 swaps
        // roles); verifies learning agents integrate with the loop.
        let topo = topo();
        let opts = SeriesOptions {
            game_id: 2,
            runs: 2,
            turns_per_agent: 12,
            seed: 11,
            attacker: None,
            defender: None,
        };
        let records = run_series(&topo, &opts, None).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.game == 2));
    }

    #[test]
    fn defender_turns_column_casts_in_order() {
        let records = vec![
            RunRecord {
                run: 1,
                game: 1,
                winner: Role::Defender,
                defender_turns: 5,
                defender_score: 32,
                attacker_score: 0,
                defender_reward_sum: 3,
                attacker_reward_sum: -3,
                seed: 0,
            },
            RunRecord {
                run: 2,
                game: 1,
                winner: Role::Attacker,
                defender_turns: 9,
                defender_score: 30,
                attacker_score: 2,
                defender_reward_sum: -1,
                attacker_reward_sum: 4,
                seed: 0,
            },
        ];
        assert_eq!(defender_turns_column(&records), vec![5.0, 9.0]);
    }
}
