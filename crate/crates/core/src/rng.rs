//! Deterministic seeded random source for sampled measurement branches and
//! random trial inputs.
//!
//! The generator is splitmix64: a single 64-bit state advanced by a fixed
//! increment and finalized with two xor-shift multiplies. It is small enough
//! to restate in a few lines in any language, which keeps sampled trial
//! sequences reproducible across ports. Not cryptographic.

/// splitmix64 generator with a single `u64` of state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimRng {
    state: u64,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Next raw 64-bit value.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Derive an independent stream, e.g. one per trial index.
    pub fn fork(&self, index: u64) -> SimRng {
        let mut probe = SimRng::new(self.state ^ index.wrapping_mul(0xA076_1D64_78BD_642F));
        // burn one output so forks of adjacent indices decorrelate
        probe.next_u64();
        probe
    }
}

/// Pick an index from a discrete distribution given by `weights`.
///
/// Weights must be non-negative and sum to ~1; the last entry absorbs any
/// floating-point remainder so the draw is always valid.
pub fn pick_weighted(rng: &mut SimRng, weights: &[f64]) -> usize {
    debug_assert!(!weights.is_empty());
    let u = rng.next_f64();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}
