//! Reproducible random streams.
//!
//! A stream is a `(seed, replica)` pair mapped onto a ChaCha8 key and
//! 64-bit stream id. ChaCha is a counter-based generator, so distinct
//! replicas are independent streams and any stream can be re-created
//! bit-for-bit from its two integers.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const GENERATOR_FAMILY: &str = "chacha8-stream/box-muller";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub replica: u64,
}

impl RngStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self { seed, replica }
    }

    pub fn algorithm(&self) -> &'static str {
        GENERATOR_FAMILY
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replica);
        rng
    }

    /// Child stream `index` of this stream: a fresh key derived from
    /// `(seed, replica)` with `index` as the stream id.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(self.replica.wrapping_add(0x5851_f42d_4c95_7f2d))),
            replica: index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform in (0, 1]; never returns zero so `ln` is finite.
#[inline]
pub fn open_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exp(rate) deviate by inversion.
#[inline]
pub fn exponential<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open_uniform(rng).ln() / rate
}

/// Fills `out` with standard normals, two per Box–Muller pair.
pub fn fill_normals<R: RngCore + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_exact_mut(2);
    for pair in &mut chunks {
        let (a, b) = box_muller(rng);
        pair[0] = a;
        pair[1] = b;
    }
    if let [last] = chunks.into_remainder() {
        *last = box_muller(rng).0;
    }
}

#[inline]
fn box_muller<R: RngCore + ?Sized>(rng: &mut R) -> (f64, f64) {
    let r = (-2.0 * open_uniform(rng).ln()).sqrt();
    let theta = std::f64::consts::TAU * rng.gen::<f64>();
    (r * theta.cos(), r * theta.sin())
}

/// Poisson(mean) deviate; zero for a non-positive mean.
pub fn poisson<R: RngCore + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = rand_distr::Poisson::new(mean).expect("positive finite Poisson mean");
    rng.sample(dist) as u64
}
