//! Reproducible Gaussian noise streams.
//!
//! Every chain draws from a ChaCha8 keystream keyed by the master seed and
//! addressed by a 64-bit stream index, so replica `r` of a run with seed `s`
//! always sees the same numbers regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::harmonic::NoiseDraw;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    stream: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, stream }
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Refills `noise` with `2d` fresh standard normals: all of `ξ`, then `ζ`.
    #[inline]
    pub fn fill<T: Scalar>(&mut self, noise: &mut NoiseDraw<T>) {
        for i in 0..noise.xi.len() {
            noise.xi[i] = T::lit(self.normal());
        }
        for i in 0..noise.zeta.len() {
            noise.zeta[i] = T::lit(self.normal());
        }
    }

    pub fn draw<T: Scalar>(&mut self, d: usize) -> NoiseDraw<T> {
        let mut n = NoiseDraw::zeros(d);
        self.fill(&mut n);
        n
    }
}
