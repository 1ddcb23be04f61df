use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier of the generator behind every [`RngStream`].
pub const RNG_ALGORITHM: &str = "chacha8";

/// Counter-based random stream with named, independent substreams.
///
/// The 64-bit master seed keys a ChaCha8 generator; a substream label selects
/// the ChaCha stream id, so adding a new consumer never shifts the draws seen
/// by existing ones.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream);
        RngStream {
            seed,
            stream,
            inner,
        }
    }

    /// Independent stream named by `label`, derived from this stream's seed
    /// and identity (not from its current position).
    pub fn substream(&self, label: &str) -> Self {
        let mut h = fnv1a(self.stream.to_le_bytes().iter().copied());
        h = fnv1a_continue(h, label.bytes());
        Self::with_stream(self.seed, h)
    }

    /// Substream keyed by a label and an integer index, e.g. one per epoch.
    pub fn indexed(&self, label: &str, index: u64) -> Self {
        let mut h = fnv1a(self.stream.to_le_bytes().iter().copied());
        h = fnv1a_continue(h, label.bytes());
        h = fnv1a_continue(h, index.to_le_bytes().iter().copied());
        Self::with_stream(self.seed, h)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u64 {
        (self.inner.get_word_pos() & u128::from(u64::MAX)) as u64
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

fn fnv1a(bytes: impl Iterator<Item = u8>) -> u64 {
    fnv1a_continue(FNV_OFFSET, bytes)
}

fn fnv1a_continue(mut h: u64, bytes: impl Iterator<Item = u8>) -> u64 {
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Stable 64-bit hash of a sequence of labelled parts; used to derive run
/// seeds from experiment coordinates.
pub fn derive_seed(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        h = fnv1a_continue(h, (part.len() as u64).to_le_bytes().into_iter());
        h = fnv1a_continue(h, part.iter().copied());
    }
    let mut state = h;
    splitmix64(&mut state)
}
