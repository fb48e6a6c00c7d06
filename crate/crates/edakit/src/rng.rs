//! Counter-based deterministic RNG streams.
//!
//! Every stochastic component in the crate draws from a ChaCha stream
//! addressed by `(seed, stream)`. Worker threads that process item `i`
//! use `stream_rng(seed, i)` and therefore consume non-overlapping
//! streams regardless of scheduling, which keeps parallel runs
//! bit-identical to serial ones.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for a `(seed, stream)` address.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Two-level stream address for nested loops (epoch/item, fold/rep, ...).
pub fn substream_rng(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    // Mix the two indices into one stream id; the odd multiplier makes
    // the map injective on u64 pairs modulo 2^64 for all practical loop
    // extents.
    let stream = a.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(b);
    stream_rng(seed, stream)
}

/// Standard normal draw (Box–Muller on two uniform deviates).
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}
