use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NoiseError;

/// Indexed source of `N(0, dt·I_m)` increments.
///
/// The increment for `step` is read from a fixed offset of the ChaCha8
/// stream selected by `(master_seed, stream_index)`, so it does not depend on
/// which other steps were sampled before.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    stream_index: u64,
    dim: usize,
    dt: f64,
    sqrt_dt: f64,
    rng: ChaCha8Rng,
}

impl PartialEq for NoiseStream {
    fn eq(&self, other: &Self) -> bool {
        (self.master_seed, self.stream_index, self.dim) == (other.master_seed, other.stream_index, other.dim)
            && self.dt == other.dt
    }
}

impl NoiseStream {
    pub fn new(master_seed: u64, stream_index: u64, dim: usize, dt: f64) -> Result<Self, NoiseError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(NoiseError::Domain(format!("dt must be positive, got {dt}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Ok(Self {
            master_seed,
            stream_index,
            dim,
            dt,
            sqrt_dt: dt.sqrt(),
            rng,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// 32-bit words consumed per step: two u64 per Box–Muller pair.
    fn words_per_step(&self) -> u128 {
        4 * self.dim.div_ceil(2) as u128
    }

    /// Writes the increment `ΔW` of step `step` into `out` (length `dim`).
    pub fn fill_increment(&mut self, step: u64, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim, "increment buffer has wrong length");
        self.rng.set_word_pos(step as u128 * self.words_per_step());
        let mut chunks = out.chunks_mut(2);
        for pair in &mut chunks {
            let (z0, z1) = box_muller(self.rng.next_u64(), self.rng.next_u64());
            pair[0] = self.sqrt_dt * z0;
            if pair.len() > 1 {
                pair[1] = self.sqrt_dt * z1;
            }
        }
    }

    pub fn sample_increment(&mut self, step: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.fill_increment(step, &mut out);
        out
    }
}

/// Two independent standard normals from two uniform 64-bit words.
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1] keeps the logarithm finite
    let u1 = ((a >> 11) + 1) as f64 * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}
