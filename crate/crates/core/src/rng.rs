//! Seedable sample generator.
//!
//! A plain 64-bit linear congruential generator with Knuth's MMIX constants:
//!
//! ```text
//! state <- state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
//! u64    = state (after the update)
//! f64    = (u64 >> 11) * 2^-53                                  in [0, 1)
//! ```
//!
//! The algorithm is fixed so that sample points can be reproduced bit for bit
//! by other implementations given the same seed.

pub const LCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
pub const LCG_INCREMENT: u64 = 1_442_695_040_888_963_407;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_range(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo + 1) as u64;
        lo + ((self.next_u64() >> 11) % span) as i64
    }

    /// A uniformly distributed unit vector in `R^dim` (normalized Gaussian
    /// pairs via Box-Muller).
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let mut v: Vec<f64> = (0..dim).map(|_| self.gaussian()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                v.iter_mut().for_each(|x| *x /= norm);
                return v;
            }
        }
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
