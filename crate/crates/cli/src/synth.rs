//! Deterministic synthetic test data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pgm::Pgm;

/// Side of the plane cloud's square footprint.
pub const PLANE_EXTENT: f64 = 1000.0;

/// Smooth 8-bit image: a diagonal ramp plus a soft bump, spanning roughly 40–215.
pub fn smooth_image(size: usize) -> Pgm {
    assert!(size >= 2, "image side must be at least 2");
    let s = (size - 1) as f64;
    let centre = 0.55 * s;
    let width = size as f64 / 5.0;
    let values: Vec<f64> = (0..size * size)
        .map(|i| {
            let (r, c) = ((i / size) as f64, (i % size) as f64);
            let d2 = (r - centre).powi(2) + (c - centre).powi(2);
            40.0 + 120.0 * (r + c) / (2.0 * s) + 55.0 * (-d2 / (2.0 * width * width)).exp()
        })
        .collect();
    Pgm::from_f64(size, size, 255, &values)
}

/// Points uniformly spread over a tilted plane, `z = 0.25x − 0.15y + 300`.
pub fn plane_cloud(points: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..points)
        .map(|_| {
            let x = rng.random_range(0.0..PLANE_EXTENT);
            let y = rng.random_range(0.0..PLANE_EXTENT);
            [x, y, 0.25 * x - 0.15 * y + 300.0]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_is_smooth_and_in_range() {
        let img = smooth_image(64);
        assert!(img.pixels.iter().all(|&p| (35..=220).contains(&p)));
        for r in 0..64 {
            for c in 1..64 {
                let (a, b) = (
                    img.pixels[r * 64 + c - 1] as i32,
                    img.pixels[r * 64 + c] as i32,
                );
                assert!((a - b).abs() <= 6);
            }
        }
    }

    #[test]
    fn cloud_is_deterministic_and_planar() {
        let a = plane_cloud(50, 3);
        assert_eq!(a, plane_cloud(50, 3));
        assert_ne!(a, plane_cloud(50, 4));
        for p in &a {
            assert!((p[2] - (0.25 * p[0] - 0.15 * p[1] + 300.0)).abs() < 1e-9);
        }
    }
}
