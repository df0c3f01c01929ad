use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit words consumed by one [`PathStream::normal_pair`].
const WORDS_PER_PAIR: u128 = 4;

/// Counter-based Gaussian stream addressed by `(seed, path)`.
///
/// Each path owns a ChaCha8 stream; pair `k` of that path always comes from
/// the same keystream words, so interval `i` of path `p` is reproducible no
/// matter which worker draws it or in which order.
pub struct PathStream {
    rng: ChaCha8Rng,
}

impl PathStream {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        PathStream { rng }
    }

    /// Positions the stream at the first pair of interval `interval`, for
    /// consumers that draw one pair per interval.
    pub fn seek_pair(&mut self, pair: usize) {
        self.rng.set_word_pos(pair as u128 * WORDS_PER_PAIR);
    }

    /// Two independent standard normals by Box–Muller from two 53-bit
    /// uniforms.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * SCALE; // (0, 1]
        let u2 = (self.rng.next_u64() >> 11) as f64 * SCALE; // [0, 1)
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (radius * c, radius * s)
    }
}
