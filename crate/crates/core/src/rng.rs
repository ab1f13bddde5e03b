//! Deterministic random number generation.
//!
//! Reproducibility across runs, platforms, and thread counts is a hard
//! requirement for the experiment harness, so the crate carries its own
//! fixed generator instead of an external one whose stream might change
//! between versions. The scheme:
//!
//! * a 64-bit seed is expanded with the splitmix64 mixer into the 256-bit
//!   state of a xoshiro256** stream (Blackman/Vigna), which supplies all
//!   random draws;
//! * subsets are drawn with a partial Fisher-Yates shuffle over a
//!   deterministically ordered population;
//! * normal deviates come from the Box-Muller transform.
//!
//! Integer draws below a bound use plain rejection-free `next_u64() % n`.
//! The modulo bias is far below anything observable at the population sizes
//! involved and keeping the mapping trivial makes the stream easy to
//! reproduce in other languages.

/// splitmix64 step: advances `state` and returns the next output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xoshiro256** stream seeded via splitmix64.
#[derive(Debug, Clone)]
pub struct Stream {
    s: [u64; 4],
}

impl Stream {
    /// Expands `seed` into the initial state with four splitmix64 steps.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Stream { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `0..bound`. `bound` must be non-zero.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }

    /// Uniform draw in the open interval (0, 1), using the top 53 bits.
    pub fn unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Log-uniform draw in `[lo, hi]`; both bounds must be positive.
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo > 0.0 && hi >= lo);
        (lo.ln() + (hi.ln() - lo.ln()) * self.unit()).exp()
    }

    /// Standard normal deviate via Box-Muller (two draws per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Moves a uniformly chosen `take`-subset to the front of `items`,
    /// in random order: steps `take` rounds of a Fisher-Yates shuffle.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], take: usize) {
        let n = items.len();
        debug_assert!(take <= n);
        for i in 0..take.min(n.saturating_sub(1)) {
            let j = i + self.below(n - i);
            items.swap(i, j);
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        self.partial_shuffle(items, n);
    }
}

/// Stable 64-bit hash used to derive independent seeds from structured keys
/// (master seed, learner and strategy identifiers, seed index).
///
/// FNV-1a over the written bytes, finished with one splitmix64 mix so that
/// closely related keys land far apart in seed space. Unlike the standard
/// library hasher this mapping is part of the file-format contract and never
/// changes.
#[derive(Debug, Clone)]
pub struct SeedHasher {
    h: u64,
}

impl SeedHasher {
    pub fn new(master: u64) -> Self {
        let mut sh = SeedHasher { h: 0xcbf2_9ce4_8422_2325 };
        sh.write_u64(master);
        sh
    }

    pub fn write_u64(&mut self, v: u64) -> &mut Self {
        for b in v.to_le_bytes() {
            self.h = (self.h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
        }
        self
    }

    pub fn write_str(&mut self, s: &str) -> &mut Self {
        for b in s.as_bytes() {
            self.h = (self.h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3);
        }
        // Separator so that ("ab","c") and ("a","bc") differ.
        self.h = (self.h ^ 0xff).wrapping_mul(0x0000_0100_0000_01b3);
        self
    }

    pub fn finish(&self) -> u64 {
        let mut s = self.h;
        splitmix64(&mut s)
    }
}
