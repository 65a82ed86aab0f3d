//! Fixed-capacity FIFO replay memory with uniform sampling.

use rand::Rng;

use crate::error::{Error, Result};

/// One environment interaction as stored for replay.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Raw (unnormalized) observation.
    pub state: Vec<f64>,
    pub action: usize,
    /// Reward used for learning (shaped when shaping is enabled).
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// True only for genuine termination. Time-limit truncation is not terminal
    /// unless the agent is configured to treat it so.
    pub terminal: bool,
}

/// Ring buffer of transitions. Once full, each push evicts the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next push writes to once the buffer is full.
    head: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be at least 1"));
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
            inserted: 0,
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

    /// Total number of pushes since creation.
    pub fn insertions(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, transition: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.head] = transition;
            self.head = (self.head + 1) % self.capacity;
        }
        self.inserted += 1;
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    /// Draws `batch_size` transitions uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if self.items.len() < batch_size || self.items.is_empty() {
            return Err(Error::InsufficientData {
                have: self.items.len(),
                need: batch_size.max(1),
            });
        }
        Ok((0..batch_size)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect())
    }

    /// Index-only variant of [`sample`](Self::sample); indices refer to
    /// storage slots, not insertion order.
    pub fn sample_indices<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        rng: &mut R,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        if self.items.len() < batch_size || self.items.is_empty() {
            return Err(Error::InsufficientData {
                have: self.items.len(),
                need: batch_size.max(1),
            });
        }
        out.clear();
        out.extend((0..batch_size).map(|_| rng.gen_range(0..self.items.len())));
        Ok(())
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.items.get(slot)
    }
}
