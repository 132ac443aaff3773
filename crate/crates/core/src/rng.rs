//! Counter-based seed derivation.
//!
//! Every random stream in the crate is keyed by a master seed plus a path of
//! integers (trial index, purpose tag, replicate index, ...). Streams derived
//! from distinct paths are independent, and the derivation does not depend on
//! evaluation order, so parallel runs reproduce serial ones bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose tags used as the second component of derived seed paths.
pub mod tag {
    pub const MODEL: u64 = 0x6d6f_6465;
    pub const DRAW: u64 = 0x6472_6177;
    pub const BOOTSTRAP: u64 = 0x626f_6f74;
    pub const PERMUTATION: u64 = 0x7065_726d;
    pub const REPLICATE: u64 = 0x7265_706c;
    pub const TSNE: u64 = 0x7473_6e65;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a path of stream identifiers.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, path: &[u64]) -> Rng {
    rng_from_seed(derive_seed(master, path))
}
