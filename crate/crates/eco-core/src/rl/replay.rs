// SPDX-License-Identifier: Apache-2.0

//! Fixed-capacity experience replay.

use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cell::Cell;

use rand::Rng;

use super::state::StateSubgraph;

#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Rc<StateSubgraph>,
    /// Local node and direction in `state`.
    pub action: (usize, usize),
    pub reward: f64,
    pub next: Rc<StateSubgraph>,
    pub terminal: bool,
    /// `max_a' Q_target(next, a')` tagged with the target generation it
    /// was computed under.
    pub(crate) target_cache: Cell<Option<(u64, f64)>>,
}

impl Transition {
    pub fn new(state: Rc<StateSubgraph>, action: (usize, usize), reward: f64, next: Rc<StateSubgraph>, terminal: bool) -> Self {
        Self { state, action, reward, next, terminal, target_cache: Cell::new(None) }
    }
}

/// Ring buffer that overwrites the oldest entry once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), head: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn get(&self, k: usize) -> &Transition {
        &self.items[k]
    }

    /// Up to `batch` distinct indices, uniformly.
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        rand::seq::index::sample(rng, self.items.len(), batch.min(self.items.len())).into_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(r: f64) -> Transition {
        let s = Rc::new(StateSubgraph::empty(3));
        Transition::new(s.clone(), (0, 0), r, s, true)
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3);
        for r in 0..5 {
            b.push(t(r as f64));
        }
        assert_eq!(b.len(), 3);
        let mut rs: Vec<f64> = (0..3).map(|k| b.get(k).reward).collect();
        rs.sort_by(f64::total_cmp);
        assert_eq!(rs, [2.0, 3.0, 4.0]);
    }

    #[test]
    fn sample_without_replacement() {
        let mut b = ReplayBuffer::new(50);
        for r in 0..40 {
            b.push(t(r as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut idx = b.sample(32, &mut rng);
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 32);
        assert_eq!(b.sample(100, &mut rng).len(), 40);
    }
}
