//! Counter-based random streams.
//!
//! A stream is ChaCha8 keyed by `seed` (expanded with `SeedableRng::seed_from_u64`)
//! with the 64-bit ChaCha stream selector set to `stream_id`. Distinct
//! `(seed, stream_id)` pairs address disjoint keystreams, so replications can
//! run in any order or in parallel and still draw identical values.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::instance::{ArmSpec, Distribution};

#[derive(Debug, Clone)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// One reward from `arm`'s distribution.
pub fn sample_reward(arm: &ArmSpec, rng: &mut RngStream) -> f64 {
    match arm.distribution {
        Distribution::Gaussian => arm.mean + arm.sigma * rng.standard_normal(),
        Distribution::Bernoulli => {
            if rng.uniform() < arm.mean {
                1.0
            } else {
                0.0
            }
        }
    }
}
