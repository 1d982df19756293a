//! Fixed inputs shared by the criterion benchmarks in `benches/`.

use hyperres::pushforward_pipeline::BoundaryDensityPair;
use hyperres::zeta_series::{synthetic_spectrum, ClosedGeodesicRecord};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded random density pair of band limit `l`.
pub fn fixture_pair(l: usize) -> BoundaryDensityPair {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    BoundaryDensityPair::random(&mut rng, l, 0.5)
}

/// Seeded synthetic spectrum of `count` closed geodesics.
pub fn fixture_records(count: usize) -> Vec<ClosedGeodesicRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    synthetic_spectrum(&mut rng, count, 20)
}
