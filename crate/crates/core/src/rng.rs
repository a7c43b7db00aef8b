//! Portable seeded random stream.
//!
//! Output `k` of the stream for seed `s` is `mix(key(s) + (k + 1) * GAMMA)`
//! where `mix` is the SplitMix64 finalizer. Normals come from Box-Muller on
//! consecutive uniforms, using both outputs of each transform. The algorithm
//! is fixed so datasets can be regenerated from a seed in any language.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64) -> CounterRng {
        CounterRng {
            key: mix(seed ^ 0x5EED_5EED_5EED_5EED),
            counter: 0,
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Integer in `0..bound` by multiply-shift (bias below 2^-64 * bound).
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "empty range");
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping ln finite
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        mean + std_dev * self.standard_normal()
    }

    /// Uniformly random permutation of `0..len` (Fisher-Yates).
    pub fn permutation(&mut self, len: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..len).collect();
        for k in (1..len).rev() {
            let r = self.below(k + 1);
            p.swap(k, r);
        }
        p
    }

    /// `count` distinct values from `0..len`, in draw order (partial Fisher-Yates).
    pub fn sample_distinct(&mut self, len: usize, count: usize) -> Vec<usize> {
        assert!(count <= len);
        let mut pool: Vec<usize> = (0..len).collect();
        for k in 0..count {
            let r = k + self.below(len - k);
            pool.swap(k, r);
        }
        pool.truncate(count);
        pool
    }
}
