//! Seed-deterministic sampling helpers.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the box `[-l, l]^n`.
pub fn sample_box(rng: &mut ChaCha8Rng, n: usize, l: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-l..l)).collect()
}

/// Uniform point in the box, rejecting points within `margin` of a wall.
pub fn sample_off_wall(
    rng: &mut ChaCha8Rng,
    spec: &crate::reflection_geometry::RootSystemSpec,
    l: f64,
    margin: f64,
) -> Vec<f64> {
    loop {
        let x = sample_box(rng, spec.dimension, l);
        if spec.wall_distance(&x) >= margin {
            return x;
        }
    }
}

/// Uniform point of the box lying in the interior of the fundamental chamber
/// (wall margin enforced).
pub fn sample_chamber_interior(
    rng: &mut ChaCha8Rng,
    atlas: &crate::reflection_geometry::ChamberAtlas,
    l: f64,
    margin: f64,
) -> Vec<f64> {
    loop {
        let x = sample_box(rng, atlas.spec.dimension, l);
        if atlas.in_chamber(&x, 0.0) && atlas.spec.wall_distance(&x) >= margin {
            return x;
        }
    }
}
