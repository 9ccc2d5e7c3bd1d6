//! Replay storage: a bounded FIFO ring buffer plus the item types the agents
//! store in it (full transitions, target-tagged samples, trajectory steps).

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::MemoryError;

/// One environment transition as seen by a single agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: i32,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// A state/action pair with a precomputed regression target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSample {
    pub s: Vec<f64>,
    pub a: usize,
    pub y: f64,
}

/// One step of the current episode's trajectory: state, action, reward.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajStep {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: i32,
}

/// Bounded FIFO buffer with uniform sampling (with replacement).
///
/// Stored items are owned copies; nothing outside the buffer can mutate them
/// later.
#[derive(Debug, Clone)]
pub struct RingBuffer<T> {
    capacity: usize,
    items: VecDeque<T>,
}

impl<T: Clone> RingBuffer<T> {
    pub fn new(capacity: usize) -> Result<RingBuffer<T>, MemoryError> {
        if capacity == 0 {
            return Err(MemoryError::ZeroCapacity);
        }
        Ok(RingBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity.min(4096)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Append, evicting the oldest item when full.
    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    /// Draw `k` items uniformly with replacement.
    pub fn sample<R: Rng>(&self, k: usize, rng: &mut R) -> Result<Vec<T>, MemoryError> {
        if self.items.is_empty() {
            return Err(MemoryError::Empty);
        }
        Ok((0..k)
            .map(|_| self.items[rng.random_range(0..self.items.len())].clone())
            .collect())
    }

    /// Survivors in insertion order, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}
