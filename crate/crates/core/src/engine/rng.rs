use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Disruption draws for manufacturer `id`: ChaCha8 keyed by the run seed, one
/// stream per manufacturer. Adding manufacturers never shifts existing streams.
pub fn manufacturer_stream(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}
