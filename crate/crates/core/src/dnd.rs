//! Per-action episodic memory with kernel-weighted nearest-neighbor reads.
//!
//! Each action keeps parallel arrays of embedding keys and Q-values. A read
//! embeds the query, takes the `p` closest stored keys by squared distance,
//! and returns their values blended by normalized inverse-distance kernels.
//! Writes either nudge an exactly-matching key's value toward the target or
//! append a new entry, evicting the least recently used one at capacity.
//! Searches are exact linear scans; store sizes stay small enough here that
//! an index structure would buy nothing but complexity.

use serde::{Deserialize, Serialize};

use crate::error::DndError;

/// Store tuning. Defaults: capacity 100 000 entries per action, kernel
/// offset 1e-3, 50 neighbors per read, value-update rate 0.1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DndConfig {
    /// Max entries per action before LRU eviction.
    pub capacity: usize,
    /// Additive offset in the kernel denominator; keeps it finite at zero
    /// distance.
    pub delta: f64,
    /// Neighbors blended per read; reads use all entries when fewer exist.
    pub neighbors: usize,
    /// Step size for updating an existing key's value toward a new target.
    pub alpha: f64,
}

impl Default for DndConfig {
    fn default() -> DndConfig {
        DndConfig {
            capacity: 100_000,
            delta: 1e-3,
            neighbors: 50,
            alpha: 0.1,
        }
    }
}

/// Inverse squared-distance kernel: `1 / (‖h − h_i‖² + delta)`.
///
/// Strictly positive and symmetric for any finite pair of equal-width
/// vectors.
pub fn kernel(h: &[f64], h_i: &[f64], delta: f64) -> Result<f64, DndError> {
    if h.len() != h_i.len() {
        return Err(DndError::KeyWidth {
            expected: h.len(),
            found: h_i.len(),
        });
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(DndError::Config("delta must be positive and finite"));
    }
    let dist2: f64 = h
        .iter()
        .zip(h_i)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    Ok(1.0 / (dist2 + delta))
}

/// Discounted N-step return: `Σ γ^j·r_j + γ^N·bootstrap` over all rewards.
pub fn n_step_q(rewards: &[f64], gamma: f64, bootstrap: f64) -> Result<f64, DndError> {
    if rewards.is_empty() {
        return Err(DndError::EmptyRewards);
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(DndError::Config("gamma must lie in [0, 1]"));
    }
    if !bootstrap.is_finite() {
        return Err(DndError::NonFinite("bootstrap"));
    }
    let mut acc = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        acc += discount * r;
        discount *= gamma;
    }
    Ok(acc + discount * bootstrap)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct ActionMemory {
    keys: Vec<Vec<f64>>,
    values: Vec<f64>,
    last_used: Vec<u64>,
}

/// Episodic key/value store, one memory per action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DndStore {
    config: DndConfig,
    key_width: usize,
    clock: u64,
    actions: Vec<ActionMemory>,
}

impl DndStore {
    pub fn new(
        action_count: usize,
        key_width: usize,
        config: DndConfig,
    ) -> Result<DndStore, DndError> {
        if action_count == 0 {
            return Err(DndError::Config("store needs at least one action"));
        }
        if key_width == 0 {
            return Err(DndError::Config("key width must be nonzero"));
        }
        if config.capacity == 0 {
            return Err(DndError::Config("capacity must be nonzero"));
        }
        if !config.delta.is_finite() || config.delta <= 0.0 {
            return Err(DndError::Config("delta must be positive and finite"));
        }
        if config.neighbors == 0 {
            return Err(DndError::Config("neighbor count must be nonzero"));
        }
        if !config.alpha.is_finite() || config.alpha <= 0.0 || config.alpha > 1.0 {
            return Err(DndError::Config("alpha must lie in (0, 1]"));
        }
        Ok(DndStore {
            config,
            key_width,
            clock: 0,
            actions: vec![ActionMemory::default(); action_count],
        })
    }

    pub fn config(&self) -> DndConfig {
        self.config
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn key_width(&self) -> usize {
        self.key_width
    }

    /// Entries stored for one action.
    pub fn len(&self, action: usize) -> Result<usize, DndError> {
        Ok(self.memory(action)?.keys.len())
    }

    pub fn is_empty(&self, action: usize) -> Result<bool, DndError> {
        Ok(self.memory(action)?.keys.is_empty())
    }

    /// Entries stored across all actions.
    pub fn total_len(&self) -> usize {
        self.actions.iter().map(|m| m.keys.len()).sum()
    }

    /// Kernel-blended value estimate for `action` at embedding `h`, plus the
    /// indices of the neighbors that contributed. Marks those entries as
    /// recently used.
    ///
    /// Fails with an empty-memory error when nothing is stored for the
    /// action; callers fall back to their parametric estimate.
    pub fn lookup(&mut self, action: usize, h: &[f64]) -> Result<(f64, Vec<usize>), DndError> {
        self.check_key(h)?;
        if self.memory(action)?.keys.is_empty() {
            return Err(DndError::EmptyAction(action));
        }
        self.clock += 1;
        let clock = self.clock;
        let delta = self.config.delta;
        let p = self.config.neighbors;
        let mem = &mut self.actions[action];

        let dist2: Vec<f64> = mem
            .keys
            .iter()
            .map(|k| k.iter().zip(h).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let mut order: Vec<usize> = (0..mem.keys.len()).collect();
        order.sort_by(|&i, &j| dist2[i].total_cmp(&dist2[j]).then(i.cmp(&j)));
        order.truncate(p);

        let kernels: Vec<f64> = order.iter().map(|&i| 1.0 / (dist2[i] + delta)).collect();
        let total: f64 = kernels.iter().sum();
        let q = order
            .iter()
            .zip(&kernels)
            .map(|(&i, k)| (k / total) * mem.values[i])
            .sum();

        for &i in &order {
            mem.last_used[i] = clock;
        }
        order.sort_unstable();
        Ok((q, order))
    }

    /// Store `q_target` under key `h` for `action`.
    ///
    /// A bitwise-identical stored key is updated in place by
    /// `Q ← Q + alpha·(q_target − Q)`; a novel key is appended, evicting the
    /// least recently used entry when the action is at capacity.
    pub fn write(&mut self, action: usize, h: &[f64], q_target: f64) -> Result<(), DndError> {
        self.check_key(h)?;
        if !q_target.is_finite() {
            return Err(DndError::NonFinite("q_target"));
        }
        let alpha = self.config.alpha;
        let capacity = self.config.capacity;
        self.clock += 1;
        let clock = self.clock;
        let mem = self.memory_mut(action)?;

        if let Some(i) = mem.keys.iter().position(|k| k.as_slice() == h) {
            mem.values[i] += alpha * (q_target - mem.values[i]);
            mem.last_used[i] = clock;
            return Ok(());
        }
        if mem.keys.len() == capacity {
            let evict = (0..mem.last_used.len())
                .min_by_key(|&i| (mem.last_used[i], i))
                .expect("non-empty at capacity");
            mem.keys.swap_remove(evict);
            mem.values.swap_remove(evict);
            mem.last_used.swap_remove(evict);
        }
        mem.keys.push(h.to_vec());
        mem.values.push(q_target);
        mem.last_used.push(clock);
        Ok(())
    }

    /// Shape and finiteness checks for a store loaded from a checkpoint.
    pub fn validate(&self) -> Result<(), DndError> {
        if self.actions.is_empty() {
            return Err(DndError::Config("store needs at least one action"));
        }
        for mem in &self.actions {
            if mem.keys.len() != mem.values.len() || mem.keys.len() != mem.last_used.len() {
                return Err(DndError::Config("parallel arrays out of sync"));
            }
            if mem.keys.len() > self.config.capacity {
                return Err(DndError::Config("action memory exceeds capacity"));
            }
            for key in &mem.keys {
                if key.len() != self.key_width {
                    return Err(DndError::KeyWidth {
                        expected: self.key_width,
                        found: key.len(),
                    });
                }
                if key.iter().any(|v| !v.is_finite()) {
                    return Err(DndError::NonFinite("stored key"));
                }
            }
            if mem.values.iter().any(|v| !v.is_finite()) {
                return Err(DndError::NonFinite("stored value"));
            }
        }
        Ok(())
    }

    fn check_key(&self, h: &[f64]) -> Result<(), DndError> {
        if h.len() != self.key_width {
            return Err(DndError::KeyWidth {
                expected: self.key_width,
                found: h.len(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(DndError::NonFinite("embedding"));
        }
        Ok(())
    }

    fn memory(&self, action: usize) -> Result<&ActionMemory, DndError> {
        self.actions.get(action).ok_or(DndError::ActionRange {
            index: action,
            limit: self.actions.len(),
        })
    }

    fn memory_mut(&mut self, action: usize) -> Result<&mut ActionMemory, DndError> {
        let limit = self.actions.len();
        self.actions.get_mut(action).ok_or(DndError::ActionRange {
            index: action,
            limit,
        })
    }
}
