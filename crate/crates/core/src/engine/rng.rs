use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::Draw;

/// Subsystem a stream belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Agent = 1,
    Churn = 2,
    Topology = 3,
    Family = 4,
    Arrival = 5,
}

/// Deterministic random stream keyed by `(seed, tag, index, step)`.
///
/// Every agent gets `(seed, Agent, node, k)`, so draws do not depend on the
/// order in which agents are evaluated.
#[derive(Clone, Debug)]
pub struct RandomStream(ChaCha8Rng);

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn derive(seed: u64, tag: StreamTag, index: u64, step: u64) -> Self {
        let mut state = seed;
        let mut mix = splitmix64(&mut state);
        for word in [tag as u64, index, step] {
            state ^= word.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ mix;
            mix = splitmix64(&mut state);
        }
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RandomStream(ChaCha8Rng::from_seed(key))
    }

    pub fn agent(seed: u64, node: u32, step: usize) -> Self {
        Self::derive(seed, StreamTag::Agent, node as u64, step as u64)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Uniform integer in `[low, high]`.
    pub fn between(&mut self, low: i64, high: i64) -> i64 {
        self.0.random_range(low..=high)
    }

    /// `amount` distinct indices from `0..len`, in sampling order.
    pub fn distinct(&mut self, len: usize, amount: usize) -> Vec<usize> {
        index::sample(&mut self.0, len, amount).into_vec()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.0);
    }
}

impl Draw for RandomStream {
    fn pick(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}
