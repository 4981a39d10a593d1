#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use patternforge::metrics::Prediction;
use patternforge::synth::source_image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every file under `root` keyed by relative path, `run.json` echoes excluded.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if !path.to_string_lossy().ends_with("run.json") {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn write_sources(dir: &Path, prefix: &str, n: usize, seed0: u64, size: u32) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        source_image(seed0 + i as u64, size, size).save_png(dir.join(format!("{prefix}{i:04}.png"))).unwrap();
    }
}

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_patternforge"));
    cmd.env_remove("PATTERNFORGE_SEED");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

/// Sweeps every distinct score as a threshold and sums precision times recall gain.
pub fn threshold_oracle(preds: &[Prediction], gt: &BTreeMap<String, String>) -> f64 {
    let mut thresholds: Vec<f64> = preds.iter().map(|p| p.score).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let g = gt.len() as f64;
    let (mut ap, mut prev_recall) = (0.0, 0.0);
    for t in thresholds {
        let kept: Vec<&Prediction> = preds.iter().filter(|p| p.score >= t).collect();
        let correct = kept.iter().filter(|p| gt.get(&p.query_id) == Some(&p.gallery_id)).count() as f64;
        let precision = correct / kept.len() as f64;
        let recall = correct / g;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Random instance with distinct scores; some queries are distractors, some true queries have no row.
pub fn instance(seed: u64) -> (Vec<Prediction>, BTreeMap<String, String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=50);
    let mut gt = BTreeMap::new();
    let mut preds = Vec::new();
    let mut used = BTreeSet::new();
    for i in 0..n {
        let q = format!("q{i:02}");
        let is_true = rng.random_bool(0.6);
        if is_true {
            gt.insert(q.clone(), format!("s{i:02}"));
        }
        if rng.random_bool(0.9) {
            let gallery = if is_true && rng.random_bool(0.5) { format!("s{i:02}") } else { format!("s{:02}", rng.random_range(0..60)) };
            let mut score: f64 = rng.random_range(-1.0..1.0);
            while !used.insert(score.to_bits()) {
                score = rng.random_range(-1.0..1.0);
            }
            preds.push(Prediction { query_id: q, gallery_id: gallery, score });
        }
    }
    if gt.is_empty() {
        gt.insert("q_missing".into(), "s_missing".into());
    }
    (preds, gt)
}

