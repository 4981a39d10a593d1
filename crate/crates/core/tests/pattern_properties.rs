use std::collections::HashMap;

use patternforge::patterns::{apply, catalog, lookup, sample_instance, PatternSplit};
use patternforge::seed::derive_seed;
use patternforge::synth::source_image;
use patternforge::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn digest(img: &Image) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(img.width().to_le_bytes());
    h.update(img.height().to_le_bytes());
    h.update(img.data());
    h.finalize().into()
}

/// Fraction of seeds whose output differs from every other seed's output.
fn unique_fraction(pattern: &str, img: &Image, seeds: u64) -> f64 {
    let mut counts: HashMap<[u8; 32], usize> = HashMap::new();
    for s in 0..seeds {
        let inst = sample_instance(pattern, derive_seed(77, pattern, s)).unwrap();
        *counts.entry(digest(&apply(img, &inst).unwrap())).or_default() += 1;
    }
    let unique = counts.values().filter(|&&c| c == 1).count();
    unique as f64 / seeds as f64
}

/// Fixed 64×64 test image: the synthetic source plus uniform per-channel noise.
fn test_image() -> Image {
    let base = source_image(2024, 64, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let data = base.data().iter().map(|&v| v.saturating_add(rng.random_range(0..48)).saturating_sub(24)).collect();
    Image::new(64, 64, data).unwrap()
}

#[test]
fn parameterized_patterns_are_seed_sensitive() {
    let img = test_image();
    let mut failures = Vec::new();
    for d in catalog().iter().filter(|d| d.is_parameterized()) {
        let f = unique_fraction(d.id, &img, 1000);
        if f < 0.99 {
            failures.push(format!("{}: {f:.3}", d.id));
        }
    }
    assert!(failures.is_empty(), "below 99% distinct: {failures:?}");
}

#[test]
fn closure_under_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC105);
    let ids: Vec<&str> = catalog().iter().map(|d| d.id).collect();
    for n in 0..10_000u64 {
        let id = ids[rng.random_range(0..ids.len())];
        let (w, h) = (rng.random_range(1..=48u32), rng.random_range(1..=48u32));
        let img = source_image(n, w, h);
        let inst = sample_instance(id, rng.random()).unwrap();
        let out = apply(&img, &inst).unwrap_or_else(|e| panic!("{id} on {w}x{h}: {e}"));
        assert!(out.width() >= 1 && out.height() >= 1, "{id} on {w}x{h}");
        assert_eq!(out.data().len(), out.width() as usize * out.height() as usize * 3);
        // the constructor re-validates every invariant
        Image::new(out.width(), out.height(), out.into_data()).unwrap();
    }
}

#[test]
fn application_is_deterministic() {
    let img = source_image(5, 50, 37);
    for d in catalog() {
        let inst = sample_instance(d.id, 99).unwrap();
        assert_eq!(apply(&img, &inst).unwrap(), apply(&img, &inst).unwrap(), "{}", d.id);
    }
}

#[test]
fn flips_are_involutions_on_random_images() {
    for s in 0..20 {
        let img = source_image(s, 3 + s as u32, 11);
        for id in ["HoriFlip", "VertFlip"] {
            let inst = sample_instance(id, s).unwrap();
            assert_eq!(apply(&apply(&img, &inst).unwrap(), &inst).unwrap(), img);
        }
    }
}

#[test]
fn rotate_angles_stay_in_range() {
    for s in 0..2000 {
        let a = sample_instance("Rotate", s).unwrap().params.f("angle");
        assert!((-45.0..=45.0).contains(&a), "{a}");
    }
}

#[test]
fn splits_partition_the_catalog() {
    let base = catalog().iter().filter(|d| d.split == PatternSplit::Base).count();
    let novel = catalog().iter().filter(|d| d.split == PatternSplit::Novel).count();
    assert_eq!((base, novel), (28, 6));
    assert_eq!(lookup("Swirl").unwrap().split, PatternSplit::Novel);
}
