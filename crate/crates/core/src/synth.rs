//! Procedural source images.
//!
//! Used as the default partner for blending patterns when no source set is
//! available, and to seed demo or test corpora without external assets.

use rand::Rng;

use crate::image::{to_u8, Image};
use crate::seed::rng_for;

/// Deterministic synthetic scene: a two-colour gradient, low-frequency
/// texture and a handful of filled ellipses and boxes.
pub fn source_image(seed: u64, width: u32, height: u32) -> Image {
    let mut rng = rng_for(seed ^ 0x5eed_1a6e_0000_0000);
    let c0: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..255.0));
    let c1: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..255.0));
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (ca, sa) = (angle.cos(), angle.sin());
    let freq: [f64; 2] = [rng.random_range(1.0..5.0), rng.random_range(1.0..5.0)];
    let phase: [f64; 2] = [rng.random_range(0.0..6.3), rng.random_range(0.0..6.3)];
    let tex_amp: f64 = rng.random_range(10.0..40.0);

    struct Blob {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        boxy: bool,
        color: [f64; 3],
    }
    let n_blobs = rng.random_range(3..8);
    let blobs: Vec<Blob> = (0..n_blobs)
        .map(|_| Blob {
            cx: rng.random_range(0.0..1.0),
            cy: rng.random_range(0.0..1.0),
            rx: rng.random_range(0.05..0.3),
            ry: rng.random_range(0.05..0.3),
            boxy: rng.random_bool(0.4),
            color: std::array::from_fn(|_| rng.random_range(0.0..255.0)),
        })
        .collect();

    let (w, h) = (width.max(1) as f64, height.max(1) as f64);
    Image::from_fn(width.max(1), height.max(1), |x, y| {
        let u = (x as f64 + 0.5) / w;
        let v = (y as f64 + 0.5) / h;
        let t = ((u - 0.5) * ca + (v - 0.5) * sa + 0.75) / 1.5;
        let tex = tex_amp
            * (std::f64::consts::TAU * freq[0] * u + phase[0]).sin()
            * (std::f64::consts::TAU * freq[1] * v + phase[1]).cos();
        let mut px: [f64; 3] = std::array::from_fn(|c| c0[c] * (1.0 - t) + c1[c] * t + tex);
        for b in &blobs {
            let dx = (u - b.cx) / b.rx;
            let dy = (v - b.cy) / b.ry;
            let inside = if b.boxy { dx.abs() <= 1.0 && dy.abs() <= 1.0 } else { dx * dx + dy * dy <= 1.0 };
            if inside {
                px = b.color;
            }
        }
        [to_u8(px[0]), to_u8(px[1]), to_u8(px[2])]
    })
    .expect("non-empty synthetic image")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        assert_eq!(source_image(3, 32, 24), source_image(3, 32, 24));
        assert_ne!(source_image(3, 32, 24), source_image(4, 32, 24));
        assert_eq!(source_image(9, 0, 0).width(), 1);
    }
}
