/// Seeded pseudo-random generator with a fixed, documented algorithm so
/// that streams are reproducible bit-exactly across platforms.
///
/// Core generator: xoshiro256** (Blackman & Vigna). State transition:
///
/// ```text
/// out  = rotl(s1 * 5, 7) * 9
/// t    = s1 << 17
/// s2 ^= s0;  s3 ^= s1;  s1 ^= s2;  s0 ^= s3;  s2 ^= t
/// s3   = rotl(s3, 45)
/// ```
///
/// Seeding: the four state words are the first four outputs of a
/// splitmix64 sequence started at the seed, with constants
/// 0x9E3779B97F4A7C15 (increment), 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB (mixers). An all-zero state is impossible because
/// splitmix64 never returns four consecutive zeros.
///
/// Derived draws:
/// - `next_f64`: top 53 bits scaled into [0, 1).
/// - `next_gaussian`: Box–Muller on two uniforms, second value cached.
/// - `shuffle`: Fisher–Yates; index by `next_u64 % k` (modulo bias is
///   below 2^-40 for every collection size used here).
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    spare_gaussian: Option<f64>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s, spare_gaussian: None }
    }

    /// Deterministic child generator for parallel or per-component use:
    /// `(seed, stream_id)` pairs map to independent streams without
    /// consuming draws from the parent.
    pub fn with_stream(seed: u64, stream_id: u64) -> Rng {
        let mut sm = seed;
        let base = splitmix64(&mut sm);
        let mut sm2 = stream_id;
        let child = base ^ splitmix64(&mut sm2).rotate_left(17);
        Rng::new(child)
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        out
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box–Muller; the paired value is cached).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        // 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn next_bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform integer in [0, n).
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }

    /// Index draw from an explicit probability table (inverse CDF walk).
    /// The table is assumed normalized; the last index absorbs rounding.
    pub fn next_categorical(&mut self, pmf: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (i, &p) in pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        pmf.len() - 1
    }
}
