//! Double DQN: an online/target network pair with experience replay.
//!
//! Action selection is ε-greedy on the online net. Bootstrap targets split
//! action selection from evaluation: the online net picks the best next
//! action, the target net prices it. The target net trails the online one
//! through a soft update after every training step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::{AgentCheckpoint, DdqnSnapshot};
use crate::error::{AgentError, NnError};
use crate::game::TurnOutcome;
use crate::memory::{RingBuffer, Transition};
use crate::nn::{DenseNet, GradientSet};

use super::{argmax, epsilon_greedy, AgentKind, EnvStep, EpsilonSchedule, TurnAgent};

/// Hyperparameters for [`DdqnAgent`]. Defaults match the experiment harness;
/// [`DdqnConfig::for_budget`] ties the exploration horizon to a step budget.
#[derive(Debug, Clone, PartialEq)]
pub struct DdqnConfig {
    /// Hidden layer widths of both nets.
    pub hidden: Vec<usize>,
    pub gamma: f64,
    /// Soft-update rate for the target net.
    pub tau: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
}

impl Default for DdqnConfig {
    fn default() -> DdqnConfig {
        DdqnConfig {
            hidden: vec![128, 128],
            gamma: 0.99,
            tau: 1e-3,
            learning_rate: 1e-3,
            batch_size: 32,
            replay_capacity: 50_000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 10_000,
        }
    }
}

impl DdqnConfig {
    /// Defaults with exploration decaying over the first fifth of `budget`
    /// agent steps.
    pub fn for_budget(budget: u64) -> DdqnConfig {
        DdqnConfig {
            epsilon_decay_steps: (budget / 5).max(1),
            ..DdqnConfig::default()
        }
    }

    fn validate(&self) -> Result<(), AgentError> {
        if !self.gamma.is_finite() || !(0.0..=1.0).contains(&self.gamma) {
            return Err(AgentError::Config("gamma must lie in [0, 1]"));
        }
        if !self.tau.is_finite() || !(0.0..=1.0).contains(&self.tau) {
            return Err(AgentError::Config("tau must lie in [0, 1]"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(AgentError::Config("learning rate must be finite and >= 0"));
        }
        if self.batch_size == 0 {
            return Err(AgentError::Config("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DdqnAgent {
    online: DenseNet,
    target: DenseNet,
    replay: RingBuffer<Transition>,
    schedule: EpsilonSchedule,
    gamma: f64,
    tau: f64,
    learning_rate: f64,
    batch_size: usize,
    rng: ChaCha8Rng,
}

impl DdqnAgent {
    /// Fresh agent with He-initialized nets, target starting equal to online.
    pub fn new(
        obs_width: usize,
        action_count: usize,
        cfg: &DdqnConfig,
        seed: u64,
    ) -> Result<DdqnAgent, AgentError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = Vec::with_capacity(cfg.hidden.len() + 2);
        widths.push(obs_width);
        widths.extend_from_slice(&cfg.hidden);
        widths.push(action_count);
        let online = DenseNet::new(&widths, &mut rng)?;
        let target = online.clone();
        Self::assemble(online, target, cfg, rng)
    }

    /// Agent over caller-supplied nets (toy setups, checkpoint restore).
    pub fn with_networks(
        online: DenseNet,
        target: DenseNet,
        cfg: &DdqnConfig,
        seed: u64,
    ) -> Result<DdqnAgent, AgentError> {
        Self::assemble(online, target, cfg, ChaCha8Rng::seed_from_u64(seed))
    }

    fn assemble(
        online: DenseNet,
        target: DenseNet,
        cfg: &DdqnConfig,
        rng: ChaCha8Rng,
    ) -> Result<DdqnAgent, AgentError> {
        cfg.validate()?;
        if !nets_congruent(&online, &target) {
            return Err(AgentError::Nn(NnError::ShapeMismatch));
        }
        Ok(DdqnAgent {
            online,
            target,
            replay: RingBuffer::new(cfg.replay_capacity)?,
            schedule: EpsilonSchedule::new(
                cfg.epsilon_start,
                cfg.epsilon_end,
                cfg.epsilon_decay_steps,
            )?,
            gamma: cfg.gamma,
            tau: cfg.tau,
            learning_rate: cfg.learning_rate,
            batch_size: cfg.batch_size,
            rng,
        })
    }

    /// ε-greedy over the online net's values, restricted to `legal`.
    pub fn select_action(
        &mut self,
        observation: &[f64],
        legal: &[usize],
    ) -> Result<usize, AgentError> {
        self.check_observation(observation)?;
        let q = self.online.forward(observation)?;
        epsilon_greedy(&q, legal, self.schedule.value(), &mut self.rng)
    }

    /// Bootstrap value for one transition: the online net chooses the next
    /// action, the target net evaluates it. Terminal transitions return the
    /// raw reward.
    pub fn double_q_target(&self, tr: &Transition) -> Result<f64, AgentError> {
        let r = f64::from(tr.r);
        if tr.done {
            return Ok(r);
        }
        let online_next = self.online.forward(&tr.s_next)?;
        let a_star = argmax(&online_next).ok_or(AgentError::NoLegalAction)?;
        let target_next = self.target.forward(&tr.s_next)?;
        Ok(r + self.gamma * target_next[a_star])
    }

    /// One optimization round: sample `batch_size` transitions (with
    /// replacement), regress toward their double-Q targets with a single
    /// batch-averaged gradient step, then soft-update the target net.
    /// Returns the mean squared TD error measured before the update.
    pub fn train_step(&mut self, batch_size: usize) -> Result<f64, AgentError> {
        if batch_size == 0 {
            return Err(AgentError::Config("batch size must be at least 1"));
        }
        let batch = self.replay.sample(batch_size, &mut self.rng)?;
        let mut loss_sum = 0.0;
        let mut total: Option<GradientSet> = None;
        for tr in &batch {
            let y = self.double_q_target(tr)?;
            let q = self.online.forward(&tr.s)?;
            let td = y - q[tr.a];
            loss_sum += td * td;
            let grads = self.online.backward_mse(&tr.s, y, tr.a)?;
            match &mut total {
                Some(sum) => sum.accumulate(&grads)?,
                None => total = Some(grads),
            }
        }
        let mean = total.expect("batch is non-empty").scaled(1.0 / batch.len() as f64);
        self.online.sgd_step(&mean, self.learning_rate)?;
        self.target.soft_update_from(&self.online, self.tau)?;
        Ok(loss_sum / batch.len() as f64)
    }

    /// Hard target sync: θ′ := θ.
    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }

    pub fn epsilon(&self) -> f64 {
        self.schedule.value()
    }

    pub fn schedule(&self) -> &EpsilonSchedule {
        &self.schedule
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    pub fn online_net(&self) -> &DenseNet {
        &self.online
    }

    pub fn target_net(&self) -> &DenseNet {
        &self.target
    }

    pub fn snapshot(&self) -> DdqnSnapshot {
        DdqnSnapshot {
            online: self.online.clone(),
            target: self.target.clone(),
            schedule: self.schedule.clone(),
            gamma: self.gamma,
            tau: self.tau,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            replay_capacity: self.replay.capacity(),
            replay_len: self.replay.len(),
        }
    }

    /// Rebuild from a snapshot. Replay contents are not persisted, so the
    /// buffer starts empty at its recorded capacity.
    pub fn from_snapshot(snap: DdqnSnapshot, seed: u64) -> Result<DdqnAgent, AgentError> {
        snap.online.validate()?;
        snap.target.validate()?;
        if !nets_congruent(&snap.online, &snap.target) {
            return Err(AgentError::Nn(NnError::ShapeMismatch));
        }
        Ok(DdqnAgent {
            online: snap.online,
            target: snap.target,
            replay: RingBuffer::new(snap.replay_capacity)?,
            schedule: snap.schedule,
            gamma: snap.gamma,
            tau: snap.tau,
            learning_rate: snap.learning_rate,
            batch_size: snap.batch_size,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn check_observation(&self, observation: &[f64]) -> Result<(), AgentError> {
        if observation.len() != self.online.input_width() {
            return Err(AgentError::ObservationWidth {
                expected: self.online.input_width(),
                found: observation.len(),
            });
        }
        Ok(())
    }
}

impl TurnAgent for DdqnAgent {
    fn act(
        &mut self,
        observation: &[f64],
        legal: &[usize],
        env: &mut EnvStep<'_>,
    ) -> Result<TurnOutcome, AgentError> {
        let action = self.select_action(observation, legal)?;
        let outcome = env(action)?;
        self.replay.push(Transition {
            s: observation.to_vec(),
            a: action,
            r: outcome.reward,
            s_next: outcome.next_observation.clone(),
            done: outcome.done,
        });
        if self.replay.len() >= self.batch_size {
            self.train_step(self.batch_size)?;
        }
        self.schedule.advance();
        Ok(outcome)
    }

    fn kind(&self) -> AgentKind {
        AgentKind::Ddqn
    }

    fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint::Ddqn(Box::new(self.snapshot()))
    }
}

fn nets_congruent(a: &DenseNet, b: &DenseNet) -> bool {
    a.layers().len() == b.layers().len()
        && a.layers().iter().zip(b.layers()).all(|(la, lb)| {
            la.in_width() == lb.in_width() && la.out_width() == lb.out_width()
        })
}
