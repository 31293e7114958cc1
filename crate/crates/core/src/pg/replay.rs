use rand::Rng;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Experience<R> {
    pub state: Vec<R>,
    pub action: Vec<R>,
    pub reward: R,
    pub next_state: Vec<R>,
    pub done: bool,
}

/// Fixed-capacity FIFO of transitions; the oldest entry is overwritten
/// once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<R> {
    capacity: usize,
    entries: Vec<Experience<R>>,
    /// Slot the next push writes to once the buffer is full.
    cursor: usize,
}

impl<R: Real> ReplayBuffer<R> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        ReplayBuffer { capacity, entries: Vec::with_capacity(capacity.min(1 << 16)), cursor: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, e: Experience<R>) {
        if self.entries.len() < self.capacity {
            self.entries.push(e);
        } else {
            self.entries[self.cursor] = e;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience<R>> {
        let (newer, older) = self.entries.split_at(self.cursor);
        older.iter().chain(newer.iter())
    }

    /// Uniform sample with replacement.
    pub fn sample<'a, G: Rng + ?Sized>(&'a self, batch: usize, rng: &mut G) -> Vec<&'a Experience<R>> {
        (0..batch).map(|_| &self.entries[rng.random_range(0..self.entries.len())]).collect()
    }
}
