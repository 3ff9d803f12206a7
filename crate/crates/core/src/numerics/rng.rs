use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream.
pub type SampleStream = ChaCha8Rng;

/// Stream number `index` of the generator seeded by `seed`.
///
/// ChaCha streams with distinct indices share no keystream, so samples
/// drawn from different indices are independent and any index can be
/// regenerated on its own.
pub fn rng_stream(seed: u64, index: u64) -> SampleStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
