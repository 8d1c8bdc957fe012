//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] keyed by a
//! master seed and a stream index, so parallel work is reproducible no matter
//! how replicates are scheduled across threads.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as AuctionRng;

/// Rng for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> AuctionRng {
    let mut rng = AuctionRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mix a seed with a label so that independent consumers of one master seed
/// never share a stream family.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
