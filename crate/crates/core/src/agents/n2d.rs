//! Episodic-memory hybrid agent: a DQN head blended with a differentiable
//! neural dictionary of N-step returns.
//!
//! The agent alternates two branches by internal turn parity. Odd turns act
//! on the blended value `λ·Q_NEC + (1−λ)·Q_DQN`, log the step into the
//! episode trajectory G, and train the DQN head on replay D of precomputed
//! targets. Even turns act on the DQN head alone, store the full transition
//! into replay E, and train on E with a one-step bootstrap priced by the
//! blended value. At episode end every trajectory step gets an N-step
//! return; while the NEC phase lasts (S < CS) those returns are also written
//! into the dictionary.
//!
//! The embedding net that produces dictionary keys is frozen after
//! initialization; only the DQN head learns.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{AgentCheckpoint, N2dSnapshot};
use crate::dnd::{n_step_q, DndConfig, DndStore};
use crate::error::{AgentError, NnError};
use crate::game::TurnOutcome;
use crate::memory::{RingBuffer, TargetSample, TrajStep, Transition};
use crate::nn::{DenseNet, GradientSet};

use super::{argmax, epsilon_greedy, AgentKind, EnvStep, EpsilonSchedule, TurnAgent};

/// How the NEC mixing weight λ evolves with the NEC-step counter S.
///
/// Whatever the mode, λ is forced to 0 once S reaches the change step: past
/// that point the dictionary no longer contributes and no longer grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    /// `λ = 1 − S/CS`, reaching 0 exactly at the change step.
    Decay,
    /// Fixed λ while S < CS (ablation aid).
    Constant(f64),
}

/// Hyperparameters for [`N2dAgent`].
#[derive(Debug, Clone, PartialEq)]
pub struct N2dConfig {
    /// Hidden layer widths of the DQN head.
    pub hidden: Vec<usize>,
    /// Hidden layer widths of the frozen embedding net.
    pub embed_hidden: Vec<usize>,
    /// Dictionary key width (embedding output).
    pub embed_width: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Replay of episode-end targets (trains odd turns).
    pub replay_d_capacity: usize,
    /// Replay of raw transitions (trains even turns).
    pub replay_e_capacity: usize,
    /// Reward horizon N of the episode-end returns.
    pub n_step: usize,
    /// NEC cutoff CS, in odd-turn steps.
    pub change_step: u64,
    pub lambda_mode: LambdaMode,
    pub dnd: DndConfig,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
}

impl Default for N2dConfig {
    fn default() -> N2dConfig {
        N2dConfig {
            hidden: vec![128, 128],
            embed_hidden: vec![64],
            embed_width: 32,
            gamma: 0.99,
            learning_rate: 1e-3,
            batch_size: 32,
            replay_d_capacity: 50_000,
            replay_e_capacity: 50_000,
            n_step: 100,
            change_step: 10_000,
            lambda_mode: LambdaMode::Decay,
            dnd: DndConfig::default(),
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 10_000,
        }
    }
}

impl N2dConfig {
    /// Defaults with the NEC cutoff at half of `budget` and exploration
    /// decaying over the first fifth.
    pub fn for_budget(budget: u64) -> N2dConfig {
        N2dConfig {
            change_step: budget / 2,
            epsilon_decay_steps: (budget / 5).max(1),
            ..N2dConfig::default()
        }
    }

    fn validate(&self) -> Result<(), AgentError> {
        if !self.gamma.is_finite() || !(0.0..=1.0).contains(&self.gamma) {
            return Err(AgentError::Config("gamma must lie in [0, 1]"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(AgentError::Config("learning rate must be finite and >= 0"));
        }
        if self.batch_size == 0 {
            return Err(AgentError::Config("batch size must be at least 1"));
        }
        if self.n_step == 0 {
            return Err(AgentError::Config("reward horizon must be at least 1"));
        }
        if let LambdaMode::Constant(c) = self.lambda_mode {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(AgentError::Config("constant lambda must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct N2dAgent {
    dqn: DenseNet,
    embed: DenseNet,
    dnd: DndStore,
    replay_d: RingBuffer<TargetSample>,
    replay_e: RingBuffer<Transition>,
    traj: Vec<TrajStep>,
    /// Odd-turn (NEC branch) counter S.
    nec_steps: u64,
    /// Internal turn counter t; odd values take the NEC branch.
    turn: u64,
    schedule: EpsilonSchedule,
    gamma: f64,
    learning_rate: f64,
    batch_size: usize,
    n_step: usize,
    change_step: u64,
    lambda_mode: LambdaMode,
    rng: ChaCha8Rng,
}

impl N2dAgent {
    pub fn new(
        obs_width: usize,
        action_count: usize,
        cfg: &N2dConfig,
        seed: u64,
    ) -> Result<N2dAgent, AgentError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dqn_widths = Vec::with_capacity(cfg.hidden.len() + 2);
        dqn_widths.push(obs_width);
        dqn_widths.extend_from_slice(&cfg.hidden);
        dqn_widths.push(action_count);
        let dqn = DenseNet::new(&dqn_widths, &mut rng)?;

        let mut embed_widths = Vec::with_capacity(cfg.embed_hidden.len() + 2);
        embed_widths.push(obs_width);
        embed_widths.extend_from_slice(&cfg.embed_hidden);
        embed_widths.push(cfg.embed_width);
        let embed = DenseNet::new(&embed_widths, &mut rng)?;

        Self::assemble(dqn, embed, cfg, rng)
    }

    /// Agent over caller-supplied nets (toy setups, checkpoint restore).
    /// The dictionary starts empty with keys sized to the embedding output.
    pub fn with_networks(
        dqn: DenseNet,
        embed: DenseNet,
        cfg: &N2dConfig,
        seed: u64,
    ) -> Result<N2dAgent, AgentError> {
        Self::assemble(dqn, embed, cfg, ChaCha8Rng::seed_from_u64(seed))
    }

    fn assemble(
        dqn: DenseNet,
        embed: DenseNet,
        cfg: &N2dConfig,
        rng: ChaCha8Rng,
    ) -> Result<N2dAgent, AgentError> {
        cfg.validate()?;
        if dqn.input_width() != embed.input_width() {
            return Err(AgentError::Nn(NnError::ShapeMismatch));
        }
        let dnd = DndStore::new(dqn.output_width(), embed.output_width(), cfg.dnd)?;
        Ok(N2dAgent {
            dnd,
            replay_d: RingBuffer::new(cfg.replay_d_capacity)?,
            replay_e: RingBuffer::new(cfg.replay_e_capacity)?,
            traj: Vec::new(),
            nec_steps: 0,
            turn: 0,
            schedule: EpsilonSchedule::new(
                cfg.epsilon_start,
                cfg.epsilon_end,
                cfg.epsilon_decay_steps,
            )?,
            gamma: cfg.gamma,
            learning_rate: cfg.learning_rate,
            batch_size: cfg.batch_size,
            n_step: cfg.n_step,
            change_step: cfg.change_step,
            lambda_mode: cfg.lambda_mode,
            dqn,
            embed,
            rng,
        })
    }

    /// Current mixing weight. Zero once S has reached the change step.
    pub fn lambda(&self) -> f64 {
        if self.nec_steps >= self.change_step {
            return 0.0;
        }
        match self.lambda_mode {
            LambdaMode::Decay => {
                (1.0 - self.nec_steps as f64 / self.change_step as f64).max(0.0)
            }
            LambdaMode::Constant(c) => c,
        }
    }

    /// Blended action values for one observation. Actions whose dictionary
    /// memory is empty, and every action once λ = 0, fall back to the DQN
    /// head alone.
    pub fn q_n2d_values(&mut self, observation: &[f64]) -> Result<Vec<f64>, AgentError> {
        let q_dqn = self.dqn.forward(observation)?;
        self.blend_with(observation, q_dqn)
    }

    /// Blended value of a single action.
    pub fn q_n2d(&mut self, observation: &[f64], action: usize) -> Result<f64, AgentError> {
        let values = self.q_n2d_values(observation)?;
        values.get(action).copied().ok_or_else(|| {
            AgentError::Nn(NnError::OutputIndex {
                index: action,
                width: self.dqn.output_width(),
            })
        })
    }

    fn blend_with(&mut self, observation: &[f64], q_dqn: Vec<f64>) -> Result<Vec<f64>, AgentError> {
        let lam = self.lambda();
        if lam == 0.0 {
            return Ok(q_dqn);
        }
        let h = self.embed.forward(observation)?;
        let mut out = q_dqn;
        for (a, q) in out.iter_mut().enumerate() {
            if !self.dnd.is_empty(a)? {
                let (q_nec, _) = self.dnd.lookup(a, &h)?;
                *q = lam * q_nec + (1.0 - lam) * *q;
            }
        }
        Ok(out)
    }

    fn q_n2d_max(&mut self, observation: &[f64]) -> Result<f64, AgentError> {
        let values = self.q_n2d_values(observation)?;
        Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// One-step bootstrap for replay E: the DQN head picks the next action,
    /// the blended value prices it; terminal transitions use the raw reward.
    fn one_step_target(&mut self, tr: &Transition) -> Result<f64, AgentError> {
        let r = f64::from(tr.r);
        if tr.done {
            return Ok(r);
        }
        let q_next = self.dqn.forward(&tr.s_next)?;
        let a_star = argmax(&q_next).ok_or(AgentError::NoLegalAction)?;
        let blended = self.blend_with(&tr.s_next, q_next)?;
        Ok(r + self.gamma * blended[a_star])
    }

    fn train_on_d(&mut self) -> Result<(), AgentError> {
        if self.replay_d.is_empty() {
            return Ok(());
        }
        let batch = self.replay_d.sample(self.batch_size, &mut self.rng)?;
        let mut total: Option<GradientSet> = None;
        for item in &batch {
            let grads = self.dqn.backward_mse(&item.s, item.y, item.a)?;
            match &mut total {
                Some(sum) => sum.accumulate(&grads)?,
                None => total = Some(grads),
            }
        }
        let mean = total.expect("batch is non-empty").scaled(1.0 / batch.len() as f64);
        self.dqn.sgd_step(&mean, self.learning_rate)?;
        Ok(())
    }

    fn train_on_e(&mut self) -> Result<(), AgentError> {
        if self.replay_e.is_empty() {
            return Ok(());
        }
        let batch = self.replay_e.sample(self.batch_size, &mut self.rng)?;
        let mut total: Option<GradientSet> = None;
        for tr in &batch {
            let y = self.one_step_target(tr)?;
            let grads = self.dqn.backward_mse(&tr.s, y, tr.a)?;
            match &mut total {
                Some(sum) => sum.accumulate(&grads)?,
                None => total = Some(grads),
            }
        }
        let mean = total.expect("batch is non-empty").scaled(1.0 / batch.len() as f64);
        self.dqn.sgd_step(&mean, self.learning_rate)?;
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.schedule.value()
    }

    pub fn schedule(&self) -> &EpsilonSchedule {
        &self.schedule
    }

    /// NEC-branch step counter S.
    pub fn nec_steps(&self) -> u64 {
        self.nec_steps
    }

    pub fn change_step(&self) -> u64 {
        self.change_step
    }

    /// Total turns taken (parity source).
    pub fn turns_taken(&self) -> u64 {
        self.turn
    }

    pub fn trajectory_len(&self) -> usize {
        self.traj.len()
    }

    pub fn replay_d_len(&self) -> usize {
        self.replay_d.len()
    }

    pub fn replay_e_len(&self) -> usize {
        self.replay_e.len()
    }

    pub fn dnd(&self) -> &DndStore {
        &self.dnd
    }

    /// Mutable dictionary access, mainly to pre-seed entries in tests and
    /// tools; the store enforces its own invariants.
    pub fn dnd_mut(&mut self) -> &mut DndStore {
        &mut self.dnd
    }

    pub fn dqn_net(&self) -> &DenseNet {
        &self.dqn
    }

    pub fn embed_net(&self) -> &DenseNet {
        &self.embed
    }

    pub fn snapshot(&self) -> N2dSnapshot {
        N2dSnapshot {
            dqn: self.dqn.clone(),
            embed: self.embed.clone(),
            dnd: self.dnd.clone(),
            schedule: self.schedule.clone(),
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            n_step: self.n_step,
            change_step: self.change_step,
            nec_steps: self.nec_steps,
            turn: self.turn,
            lambda_mode: self.lambda_mode,
            replay_d_capacity: self.replay_d.capacity(),
            replay_e_capacity: self.replay_e.capacity(),
            replay_d_len: self.replay_d.len(),
            replay_e_len: self.replay_e.len(),
        }
    }

    /// Rebuild from a snapshot. Replay contents and the open trajectory are
    /// not persisted; buffers start empty at their recorded capacities.
    pub fn from_snapshot(snap: N2dSnapshot, seed: u64) -> Result<N2dAgent, AgentError> {
        snap.dqn.validate()?;
        snap.embed.validate()?;
        snap.dnd.validate()?;
        if snap.dqn.input_width() != snap.embed.input_width()
            || snap.dnd.action_count() != snap.dqn.output_width()
            || snap.dnd.key_width() != snap.embed.output_width()
        {
            return Err(AgentError::Nn(NnError::ShapeMismatch));
        }
        if snap.batch_size == 0 || snap.n_step == 0 {
            return Err(AgentError::Config("snapshot has a zero-sized hyperparameter"));
        }
        Ok(N2dAgent {
            dqn: snap.dqn,
            embed: snap.embed,
            dnd: snap.dnd,
            replay_d: RingBuffer::new(snap.replay_d_capacity)?,
            replay_e: RingBuffer::new(snap.replay_e_capacity)?,
            traj: Vec::new(),
            nec_steps: snap.nec_steps,
            turn: snap.turn,
            schedule: snap.schedule,
            gamma: snap.gamma,
            learning_rate: snap.learning_rate,
            batch_size: snap.batch_size,
            n_step: snap.n_step,
            change_step: snap.change_step,
            lambda_mode: snap.lambda_mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn check_observation(&self, observation: &[f64]) -> Result<(), AgentError> {
        if observation.len() != self.dqn.input_width() {
            return Err(AgentError::ObservationWidth {
                expected: self.dqn.input_width(),
                found: observation.len(),
            });
        }
        Ok(())
    }
}

impl TurnAgent for N2dAgent {
    fn act(
        &mut self,
        observation: &[f64],
        legal: &[usize],
        env: &mut EnvStep<'_>,
    ) -> Result<TurnOutcome, AgentError> {
        self.check_observation(observation)?;
        self.turn += 1;
        let nec_branch = self.turn % 2 == 1;
        let eps = self.schedule.value();

        let action = if nec_branch {
            let q = self.q_n2d_values(observation)?;
            epsilon_greedy(&q, legal, eps, &mut self.rng)?
        } else {
            let q = self.dqn.forward(observation)?;
            epsilon_greedy(&q, legal, eps, &mut self.rng)?
        };

        let outcome = env(action)?;

        if nec_branch {
            self.traj.push(TrajStep {
                s: observation.to_vec(),
                a: action,
                r: outcome.reward,
            });
            self.train_on_d()?;
            self.nec_steps += 1;
        } else {
            self.replay_e.push(Transition {
                s: observation.to_vec(),
                a: action,
                r: outcome.reward,
                s_next: outcome.next_observation.clone(),
                done: outcome.done,
            });
            self.train_on_e()?;
        }
        self.schedule.advance();
        Ok(outcome)
    }

    /// Flush the episode trajectory: compute every step's N-step return
    /// against the dictionary as it stood during the episode, then write.
    ///
    /// Targets first, writes second: a step's return must not see values
    /// written for earlier steps of the same flush.
    fn finish_episode(&mut self) -> Result<(), AgentError> {
        if self.traj.is_empty() {
            return Ok(());
        }
        let len = self.traj.len();
        let mut targets = Vec::with_capacity(len);
        for i in 0..len {
            let window_end = (i + self.n_step).min(len);
            let rewards: Vec<f64> = self.traj[i..window_end]
                .iter()
                .map(|step| f64::from(step.r))
                .collect();
            // The bootstrap state is N steps ahead in the trajectory; past
            // the end, the episode is over and the tail value is zero.
            let bootstrap = if i + self.n_step < len {
                let state = self.traj[i + self.n_step].s.clone();
                self.q_n2d_max(&state)?
            } else {
                0.0
            };
            targets.push(n_step_q(&rewards, self.gamma, bootstrap)?);
        }

        let write_dnd = self.nec_steps < self.change_step;
        let flushed = std::mem::take(&mut self.traj);
        for (step, y) in flushed.into_iter().zip(targets) {
            if write_dnd {
                let h = self.embed.forward(&step.s)?;
                self.dnd.write(step.a, &h, y)?;
            }
            self.replay_d.push(TargetSample {
                s: step.s,
                a: step.a,
                y,
            });
        }
        Ok(())
    }

    fn kind(&self) -> AgentKind {
        AgentKind::N2d
    }

    fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint::N2d(Box::new(self.snapshot()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::GameError;
    use crate::nn::{Activation, Layer};

    /// Single identity layer with zero weights: every output is its bias.
    fn bias_net(in_width: usize, bias: Vec<f64>) -> DenseNet {
        let out = bias.len();
        let layer =
            Layer::new(in_width, out, Activation::Identity, vec![0.0; in_width * out], bias)
                .unwrap();
        DenseNet::from_layers(vec![layer]).unwrap()
    }

    /// Identity embedding: key equals the observation.
    fn identity_net(width: usize) -> DenseNet {
        let mut weights = vec![0.0; width * width];
        for i in 0..width {
            weights[i * width + i] = 1.0;
        }
        let layer =
            Layer::new(width, width, Activation::Identity, weights, vec![0.0; width]).unwrap();
        DenseNet::from_layers(vec![layer]).unwrap()
    }

    fn toy_cfg() -> N2dConfig {
        N2dConfig {
            hidden: vec![],
            embed_hidden: vec![],
            embed_width: 3,
            learning_rate: 0.0,
            batch_size: 4,
            replay_d_capacity: 64,
            replay_e_capacity: 64,
            n_step: 2,
            change_step: 1_000,
            epsilon_start: 0.0,
            epsilon_end: 0.0,
            epsilon_decay_steps: 10,
            dnd: DndConfig {
                neighbors: 1,
                ..DndConfig::default()
            },
            ..N2dConfig::default()
        }
    }

    /// Agent whose DQN head always outputs 4.0 and whose embedding maps every
    /// observation to the zero key. Seeding the dictionary with value 2.0 at
    /// the zero key gives exact, hand-checkable blends.
    fn blend_fixture(mode: LambdaMode) -> N2dAgent {
        let cfg = N2dConfig {
            lambda_mode: mode,
            ..toy_cfg()
        };
        let dqn = bias_net(3, vec![4.0, 4.0]);
        let embed = bias_net(3, vec![0.0, 0.0, 0.0]);
        let mut agent = N2dAgent::with_networks(dqn, embed, &cfg, 0).unwrap();
        agent.dnd_mut().write(0, &[0.0; 3], 2.0).unwrap();
        agent.dnd_mut().write(1, &[0.0; 3], 2.0).unwrap();
        agent
    }

    fn scripted(reward: i32, next: Vec<f64>) -> TurnOutcome {
        TurnOutcome {
            reward,
            next_observation: next,
            done: false,
            winner: None,
            defender_turns_so_far: 0,
        }
    }

    #[test]
    fn blend_arithmetic_is_exact() {
        let obs = [1.0, 0.0, 1.0];
        let mut full_nec = blend_fixture(LambdaMode::Constant(1.0));
        assert_eq!(full_nec.q_n2d(&obs, 0).unwrap(), 2.0);
        let mut no_nec = blend_fixture(LambdaMode::Constant(0.0));
        assert_eq!(no_nec.q_n2d(&obs, 0).unwrap(), 4.0);
        let mut half = blend_fixture(LambdaMode::Constant(0.5));
        assert_eq!(half.q_n2d(&obs, 0).unwrap(), 3.0);
    }

    #[test]
    fn decaying_lambda_hits_half_after_one_nec_step() {
        // CS = 2: after a single odd turn S = 1, so λ = 1 − 1/2 = 0.5 and the
        // blend of Q_NEC = 2 with Q_DQN = 4 is exactly 3.
        let cfg = N2dConfig {
            change_step: 2,
            ..toy_cfg()
        };
        let dqn = bias_net(3, vec![4.0, 4.0]);
        let embed = bias_net(3, vec![0.0; 3]);
        let mut agent = N2dAgent::with_networks(dqn, embed, &cfg, 0).unwrap();
        agent.dnd_mut().write(0, &[0.0; 3], 2.0).unwrap();
        assert_eq!(agent.lambda(), 1.0);
        let mut env =
            |_a: usize| -> Result<TurnOutcome, GameError> { Ok(scripted(0, vec![0.0; 3])) };
        agent.act(&[1.0, 0.0, 1.0], &[0, 1], &mut env).unwrap();
        assert_eq!(agent.nec_steps(), 1);
        assert_eq!(agent.lambda(), 0.5);
        assert_eq!(agent.q_n2d(&[1.0, 0.0, 1.0], 0).unwrap(), 3.0);
    }

    #[test]
    fn blend_stays_between_the_two_values() {
        for step in 0..=10 {
            let lam = step as f64 / 10.0;
            let mut agent = blend_fixture(LambdaMode::Constant(lam));
            let v = agent.q_n2d(&[0.5, 0.5, 0.5], 0).unwrap();
            assert!((2.0..=4.0).contains(&v), "λ = {lam} produced {v}");
        }
    }

    #[test]
    fn empty_dictionary_falls_back_to_the_dqn_head() {
        let cfg = N2dConfig {
            lambda_mode: LambdaMode::Constant(1.0),
            ..toy_cfg()
        };
        let dqn = bias_net(3, vec![4.0, 7.0]);
        let embed = bias_net(3, vec![0.0; 3]);
        let mut agent = N2dAgent::with_networks(dqn, embed, &cfg, 0).unwrap();
        assert_eq!(agent.q_n2d_values(&[0.0; 3]).unwrap(), vec![4.0, 7.0]);
        // One seeded action blends; the other still falls back.
        agent.dnd_mut().write(1, &[0.0; 3], 1.0).unwrap();
        assert_eq!(agent.q_n2d_values(&[0.0; 3]).unwrap(), vec![4.0, 1.0]);
    }

    #[test]
    fn past_the_change_step_the_head_rules_and_writes_stop() {
        let cfg = N2dConfig {
            change_step: 1,
            ..toy_cfg()
        };
        let dqn = bias_net(3, vec![4.0, 4.0]);
        let embed = bias_net(3, vec![0.0; 3]);
        let mut agent = N2dAgent::with_networks(dqn, embed, &cfg, 0).unwrap();
        agent.dnd_mut().write(0, &[0.0; 3], 2.0).unwrap();
        let mut env =
            |_a: usize| -> Result<TurnOutcome, GameError> { Ok(scripted(1, vec![0.0; 3])) };
        agent.act(&[1.0, 1.0, 0.0], &[0, 1], &mut env).unwrap();
        assert_eq!(agent.nec_steps(), 1);
        assert_eq!(agent.lambda(), 0.0);
        // Blend is now identically the head's output despite the seeded entry.
        assert_eq!(agent.q_n2d_values(&[1.0, 1.0, 0.0]).unwrap(), vec![4.0, 4.0]);
        // Episode flush must not grow the dictionary any more.
        let before = agent.dnd().total_len();
        agent.finish_episode().unwrap();
        assert_eq!(agent.dnd().total_len(), before);
        assert_eq!(agent.replay_d_len(), 1);
    }

    #[test]
    fn branch_parity_alternates_strictly() {
        let mut agent = N2dAgent::new(3, 2, &toy_cfg(), 5).unwrap();
        let mut expect = Vec::new();
        for k in 1..=6u64 {
            let mut env =
                |_a: usize| -> Result<TurnOutcome, GameError> { Ok(scripted(0, vec![0.5; 3])) };
            agent.act(&[0.5; 3], &[0, 1], &mut env).unwrap();
            expect.push(k);
            assert_eq!(agent.turns_taken(), k);
            assert_eq!(agent.trajectory_len(), k.div_ceil(2) as usize);
            assert_eq!(agent.replay_e_len(), (k / 2) as usize);
            assert_eq!(agent.nec_steps(), k.div_ceil(2));
        }
    }

    #[test]
    fn cold_start_trains_nothing_but_still_acts() {
        let cfg = N2dConfig {
            learning_rate: 0.5,
            ..toy_cfg()
        };
        let mut agent = N2dAgent::new(3, 2, &cfg, 5).unwrap();
        let before = format!("{:?}", agent.dqn_net().layers());
        // First turn: D is empty, so the odd branch has nothing to train on.
        let mut env =
            |_a: usize| -> Result<TurnOutcome, GameError> { Ok(scripted(1, vec![0.1; 3])) };
        agent.act(&[0.9, 0.1, 0.0], &[0, 1], &mut env).unwrap();
        assert_eq!(format!("{:?}", agent.dqn_net().layers()), before);
        // Second turn stores into E and immediately trains on it.
        let mut env =
            |_a: usize| -> Result<TurnOutcome, GameError> { Ok(scripted(1, vec![0.2; 3])) };
        agent.act(&[0.8, 0.2, 0.0], &[0, 1], &mut env).unwrap();
        assert_ne!(format!("{:?}", agent.dqn_net().layers()), before);
    }

    #[test]
    fn episode_flush_matches_a_backward_accumulation_oracle() {
        // γ = 0.5, N = 2, zero nets (lr = 0 keeps them zero), so every
        // bootstrap is 0 and returns reduce to reward sums over the window.
        let cfg = N2dConfig {
            gamma: 0.5,
            lambda_mode: LambdaMode::Constant(0.0),
            ..toy_cfg()
        };
        let dqn = bias_net(3, vec![0.0, 0.0]);
        let embed = identity_net(3);
        let mut agent = N2dAgent::with_networks(dqn, embed, &cfg, 0).unwrap();

        let odd_rewards = [1, -1, 1, 1, -1];
        let mut odd_seen = 0;
        for k in 1..=9u64 {
            let reward = if k % 2 == 1 {
                odd_seen += 1;
                odd_rewards[odd_seen - 1]
            } else {
                0
            };
            let obs = vec![k as f64, 0.0, 0.0];
            let mut env = |_a: usize| -> Result<TurnOutcome, GameError> {
                Ok(scripted(reward, vec![k as f64 + 0.5, 0.0, 0.0]))
            };
            agent.act(&obs, &[0, 1], &mut env).unwrap();
        }
        agent.finish_episode().unwrap();

        // Oracle: y_i = Σ_{j} γ^j r_{i+j} over the available window of 2.
        let gamma = 0.5;
        let r: Vec<f64> = odd_rewards.iter().map(|&x| f64::from(x)).collect();
        let expected: Vec<f64> = (0..r.len())
            .map(|i| {
                let mut y = 0.0;
                let mut scale = 1.0;
                #[allow(clippy::needless_range_loop)]
                for j in i..(i + 2).min(r.len()) {
                    y += scale * r[j];
                    scale *= gamma;
                }
                y
            })
            .collect();
        let got: Vec<f64> = agent.replay_d.iter().map(|t| t.y).collect();
        assert_eq!(got, expected);
        assert_eq!(got, vec![0.5, -0.5, 1.5, 0.5, -1.0]);
        assert_eq!(agent.trajectory_len(), 0);
        // Five distinct keys written for the always-greedy action 0.
        assert_eq!(agent.dnd().len(0).unwrap(), 5);
    }

    #[test]
    fn single_terminal_step_yields_its_raw_reward() {
        let mut agent = N2dAgent::new(3, 2, &toy_cfg(), 3).unwrap();
        let mut env = |_a: usize| -> Result<TurnOutcome, GameError> {
            Ok(TurnOutcome {
                reward: 1,
                next_observation: vec![0.0; 3],
                done: true,
                winner: None,
                defender_turns_so_far: 1,
            })
        };
        agent.act(&[1.0, 0.0, 0.0], &[0, 1], &mut env).unwrap();
        agent.finish_episode().unwrap();
        assert_eq!(agent.replay_d_len(), 1);
        assert_eq!(agent.replay_d.iter().next().unwrap().y, 1.0);
    }

    #[test]
    fn flush_lookup_returns_the_written_target() {
        // p = 1 nearest-neighbor: querying an inserted key returns its value.
        let cfg = N2dConfig {
            gamma: 0.9,
            ..toy_cfg()
        };
        let dqn = bias_net(3, vec![0.0, 0.0]);
        let embed = identity_net(3);
        let mut agent = N2dAgent::with_networks(dqn, embed, &cfg, 0).unwrap();
        for k in 1..=5u64 {
            let obs = vec![10.0 * k as f64, 1.0, 0.0];
            let mut env =
                |_a: usize| -> Result<TurnOutcome, GameError> { Ok(scripted(1, vec![0.0; 3])) };
            agent.act(&obs, &[0, 1], &mut env).unwrap();
        }
        agent.finish_episode().unwrap();
        let targets: Vec<(Vec<f64>, usize, f64)> = agent
            .replay_d
            .iter()
            .map(|t| (t.s.clone(), t.a, t.y))
            .collect();
        for (s, a, y) in targets {
            let h = agent.embed_net().forward(&s).unwrap();
            let (value, _) = agent.dnd_mut().lookup(a, &h).unwrap();
            assert_eq!(value, y);
        }
    }

    #[test]
    fn flush_targets_ignore_same_flush_writes() {
        // Every observation shares one dictionary key. With γ = 1, N = 1 and
        // λ = 1, a step's return would absorb the previous step's freshly
        // written value if writes interleaved with target computation; the
        // dictionary is empty throughout the episode, so each return must be
        // exactly its own reward.
        let cfg = N2dConfig {
            gamma: 1.0,
            n_step: 1,
            lambda_mode: LambdaMode::Constant(1.0),
            ..toy_cfg()
        };
        let dqn = bias_net(3, vec![0.0, 0.0]);
        let embed = bias_net(3, vec![0.0; 3]);
        let mut agent = N2dAgent::with_networks(dqn, embed, &cfg, 0).unwrap();
        let odd_rewards = [5, -3, 2];
        let mut odd_seen = 0;
        for k in 1..=5u64 {
            let reward = if k % 2 == 1 {
                odd_seen += 1;
                odd_rewards[odd_seen - 1]
            } else {
                0
            };
            let mut env = |_a: usize| -> Result<TurnOutcome, GameError> {
                Ok(scripted(reward, vec![1.0; 3]))
            };
            agent.act(&[1.0; 3], &[0, 1], &mut env).unwrap();
        }
        agent.finish_episode().unwrap();
        let got: Vec<f64> = agent.replay_d.iter().map(|t| t.y).collect();
        assert_eq!(got, vec![5.0, -3.0, 2.0]);
        // All three writes merged into the single shared key.
        assert_eq!(agent.dnd().len(0).unwrap(), 1);
    }

    #[test]
    fn embedding_stays_frozen_while_the_head_learns() {
        let cfg = N2dConfig {
            learning_rate: 0.1,
            hidden: vec![4],
            embed_hidden: vec![4],
            ..toy_cfg()
        };
        let mut agent = N2dAgent::new(3, 2, &cfg, 21).unwrap();
        let embed_before = format!("{:?}", agent.embed_net().layers());
        let dqn_before = format!("{:?}", agent.dqn_net().layers());
        for k in 1..=8u64 {
            let mut env = |_a: usize| -> Result<TurnOutcome, GameError> {
                Ok(scripted(if k % 2 == 0 { 1 } else { -1 }, vec![0.3; 3]))
            };
            agent.act(&[0.7, 0.3, 0.1], &[0, 1], &mut env).unwrap();
        }
        agent.finish_episode().unwrap();
        assert_eq!(format!("{:?}", agent.embed_net().layers()), embed_before);
        assert_ne!(format!("{:?}", agent.dqn_net().layers()), dqn_before);
    }

    #[test]
    fn snapshot_round_trip_preserves_learned_state() {
        let cfg = N2dConfig {
            learning_rate: 0.01,
            ..toy_cfg()
        };
        let mut agent = N2dAgent::new(3, 2, &cfg, 13).unwrap();
        for k in 1..=7u64 {
            let mut env = |_a: usize| -> Result<TurnOutcome, GameError> {
                Ok(scripted((k % 3) as i32 - 1, vec![0.2 * k as f64; 3]))
            };
            agent.act(&[0.1 * k as f64; 3], &[0, 1], &mut env).unwrap();
        }
        agent.finish_episode().unwrap();
        let snap = agent.snapshot();
        let mut restored = N2dAgent::from_snapshot(snap, 99).unwrap();
        assert_eq!(restored.nec_steps(), agent.nec_steps());
        assert_eq!(restored.turns_taken(), agent.turns_taken());
        assert_eq!(restored.lambda(), agent.lambda());
        assert_eq!(restored.epsilon(), agent.epsilon());
        assert_eq!(restored.dnd().total_len(), agent.dnd().total_len());
        assert_eq!(restored.replay_d_len(), 0);
        assert_eq!(restored.replay_e_len(), 0);
        let obs = [0.4, 0.2, 0.6];
        assert_eq!(
            restored.q_n2d_values(&obs).unwrap(),
            agent.q_n2d_values(&obs).unwrap()
        );
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let bad = N2dConfig {
            lambda_mode: LambdaMode::Constant(1.5),
            ..toy_cfg()
        };
        assert!(N2dAgent::new(3, 2, &bad, 0).is_err());
        let bad = N2dConfig {
            n_step: 0,
            ..toy_cfg()
        };
        assert!(N2dAgent::new(3, 2, &bad, 0).is_err());
        let bad = N2dConfig {
            gamma: -0.1,
            ..toy_cfg()
        };
        assert!(N2dAgent::new(3, 2, &bad, 0).is_err());
        // Mismatched net input widths.
        let dqn = bias_net(3, vec![0.0, 0.0]);
        let embed = bias_net(4, vec![0.0; 3]);
        assert!(matches!(
            N2dAgent::with_networks(dqn, embed, &toy_cfg(), 0),
            Err(AgentError::Nn(NnError::ShapeMismatch))
        ));
    }

    #[test]
    fn wrong_observation_width_is_rejected() {
        let mut agent = N2dAgent::new(3, 2, &toy_cfg(), 1).unwrap();
        let mut env =
            |_a: usize| -> Result<TurnOutcome, GameError> { Ok(scripted(0, vec![0.0; 3])) };
        assert!(matches!(
            agent.act(&[0.0; 5], &[0, 1], &mut env),
            Err(AgentError::ObservationWidth { expected: 3, found: 5 })
        ));
    }
}
