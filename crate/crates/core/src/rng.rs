//! Seeded randomness and quasi-uniform direction sets.
//!
//! Every randomized choice is keyed by `(seed, item index)` so results do
//! not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Vector;

/// SplitMix64 finalizer applied to the pair `(seed, index)`.
pub fn item_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(item_seed(seed, index))
}

/// `count` equally spaced unit vectors in the plane, rotated by `offset`
/// radians.
pub fn circle_directions(count: usize, offset: f64) -> Vec<[f64; 2]> {
    (0..count)
        .map(|k| {
            let t = offset + std::f64::consts::TAU * k as f64 / count as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

/// Fibonacci lattice of `count` points on S², each cell of equal area.
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

/// Uniformly random rotation of ℝ³ as a row-major 3×3 matrix.
pub fn random_rotation<R: Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    // unit quaternion from three uniforms (Shoemake)
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin(), b * (tau * u3).cos());
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Quasi-uniform unit vectors in ℝ^dim (dim ∈ {2, 3}) with a seeded
/// rigid rotation of the base lattice.
pub fn directions(dim: usize, count: usize, seed: u64, index: u64) -> Vec<Vector> {
    let mut rng = item_rng(seed, index);
    match dim {
        2 => {
            let offset = rng.gen::<f64>() * std::f64::consts::TAU / count as f64;
            circle_directions(count, offset)
                .into_iter()
                .map(|d| Vector::from_column_slice(&d))
                .collect()
        }
        3 => {
            let rot = random_rotation(&mut rng);
            fibonacci_sphere(count)
                .into_iter()
                .map(|p| {
                    Vector::from_fn(3, |i, _| rot[i][0] * p[0] + rot[i][1] * p[1] + rot[i][2] * p[2])
                })
                .collect()
        }
        _ => panic!("directions are generated in dimension 2 or 3 only"),
    }
}
