use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{ActionVector, Observation, ACTION_DIM, OBS_DIM};
use crate::error::TrainError;

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub s: Observation,
    pub a: ActionVector,
    pub r: f64,
    pub s_next: Observation,
    pub done: bool,
}

/// A sampled minibatch laid out row-per-transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub dones: Array1<f64>,
}

impl Batch {
    pub fn from_transitions<'a, I>(items: I) -> Batch
    where
        I: IntoIterator<Item = &'a Transition>,
        I::IntoIter: ExactSizeIterator,
    {
        let items = items.into_iter();
        let n = items.len();
        let mut b = Batch {
            states: Array2::zeros((n, OBS_DIM)),
            actions: Array2::zeros((n, ACTION_DIM)),
            rewards: Array1::zeros(n),
            next_states: Array2::zeros((n, OBS_DIM)),
            dones: Array1::zeros(n),
        };
        for (i, t) in items.enumerate() {
            b.states.row_mut(i).assign(&ndarray::ArrayView1::from(&t.s.0[..]));
            b.actions.row_mut(i).assign(&ndarray::ArrayView1::from(&t.a.0[..]));
            b.rewards[i] = t.r;
            b.next_states.row_mut(i).assign(&ndarray::ArrayView1::from(&t.s_next.0[..]));
            b.dones[i] = if t.done { 1.0 } else { 0.0 };
        }
        b
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Fixed-capacity ring buffer with its own sampling stream.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        Self::with_rng(capacity, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(capacity: usize, rng: ChaCha8Rng) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            items: Vec::new(),
            capacity,
            cursor: 0,
            rng,
        }
    }

    /// Rebuilds a buffer from stored parts, oldest-first order given by `cursor`.
    pub fn from_parts(capacity: usize, items: Vec<Transition>, cursor: usize, rng: ChaCha8Rng) -> Option<Self> {
        if capacity == 0 || items.len() > capacity || cursor > items.len() || (items.len() < capacity && cursor != items.len() % capacity) {
            return None;
        }
        Some(ReplayBuffer {
            items,
            capacity,
            cursor: cursor % capacity,
            rng,
        })
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

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn items(&self) -> &[Transition] {
        &self.items
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Stored transitions from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// Uniform sampling with replacement.
    pub fn sample(&mut self, batch: usize) -> Result<Batch, TrainError> {
        if self.items.len() < batch || batch == 0 {
            return Err(TrainError::BufferTooSmall {
                len: self.items.len(),
                batch,
            });
        }
        let n = self.items.len();
        let idx: Vec<usize> = (0..batch).map(|_| self.rng.random_range(0..n)).collect();
        Ok(Batch::from_transitions(idx.iter().map(|&i| &self.items[i])))
    }
}
