//! Counter-based random streams.
//!
//! Every task draws from its own ChaCha stream, keyed by the master seed and
//! selected by a hash of `(label, a, b)`. Streams never depend on scheduling
//! order, so parallel sampling is reproducible for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Stream identifier for `(label, a, b)`.
pub fn stream_id(label: &str, a: u64, b: u64) -> u64 {
    let h = splitmix64(fnv1a(label));
    let h = splitmix64(h ^ a);
    splitmix64(h ^ b.rotate_left(17))
}

/// Independent generator for task `(label, a, b)` under `seed`.
pub fn stream(seed: u64, label: &str, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(label, a, b));
    rng
}
