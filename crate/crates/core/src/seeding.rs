use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream tags keep different consumers of one base seed apart.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const ROLLOUT_ENV: u64 = 2;
    pub const ROLLOUT_POLICY: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const EVAL_ENV: u64 = 5;
    pub const EVAL_POLICY: u64 = 6;
    pub const ORACLE: u64 = 7;
}

/// Independent 64-bit seed for `(stream, index)` under `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

pub fn derive_rng(base: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream, index))
}
