//! Seeded generator shared by every synthetic-data routine.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// Recorded in manifests so fixtures can be regenerated elsewhere.
pub const PRNG_ALGORITHM: &str = "chacha20";

pub type SynthRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> SynthRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream of the same seed, so adding draws to one generator
/// never shifts the draws of another.
pub fn substream(seed: u64, stream: u64) -> SynthRng {
    let mut r = seeded(seed);
    r.set_stream(stream);
    r
}

pub fn std_normal(rng: &mut SynthRng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform random direction on the unit sphere.
pub fn unit_vector(rng: &mut SynthRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| std_normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
