//! Dataset forging: training sets, evaluation sets and prompt pools.
//!
//! Every output record gets its own seed from [`derive_seed`], so the forged
//! tree is a function of the configuration alone. Work is spread over a
//! dedicated thread pool and merged into manifests sorted by id.

mod records;
mod sources;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use records::{read_jsonl, write_jsonl, ErrorEntry, PromptPoolEntry, ProvenanceRecord, RecordSplit};
pub use sources::{SourceEntry, SourceManifest, SourcePartners};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::GroundTruth;
use crate::patterns::{
    apply_combo_with, catalog, combo_key, lookup, parse_combo_key, sample_instance, Category, ParamValue, Params,
    PartnerSource, PatternCombo, PatternInstance, PatternSplit,
};
pub use crate::seed::derive_seed;
use crate::seed::rng_for;

pub const TRAIN_MANIFEST: &str = "train.jsonl";
pub const QUERY_MANIFEST: &str = "queries.jsonl";
pub const GALLERY_MANIFEST: &str = "gallery.jsonl";
pub const POOL_MANIFEST: &str = "pool.jsonl";
pub const POOL_RECORDS: &str = "pool_records.jsonl";
pub const GROUND_TRUTH: &str = "gt.csv";
pub const ERROR_LOG: &str = "errors.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgeConfig {
    pub global_seed: u64,
    pub replicas_per_original: usize,
    /// Inclusive `[kmin, kmax]` patterns per combo.
    pub combo_size_range: (usize, usize),
    pub n_true_queries: usize,
    pub n_distractor_queries: usize,
    pub pool_pairs_per_combo: usize,
    pub pattern_split_selector: PatternSplit,
    /// Restricts the pattern pool to these categories when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<Category>>,
    /// Queries become full-frame crops (a no-op transform) for sanity runs.
    #[serde(default)]
    pub identity_queries: bool,
    pub workers: usize,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        Self {
            global_seed: 0,
            replicas_per_original: 9,
            combo_size_range: (1, 3),
            n_true_queries: 200,
            n_distractor_queries: 800,
            pool_pairs_per_combo: 10,
            pattern_split_selector: PatternSplit::Base,
            categories: None,
            identity_queries: false,
            workers: 1,
        }
    }
}

impl ForgeConfig {
    pub fn validate(&self) -> Result<()> {
        let (kmin, kmax) = self.combo_size_range;
        if kmin < 1 || kmax > 3 || kmin > kmax {
            return Err(Error::Config(format!("combo size range [{kmin}, {kmax}] must satisfy 1 <= kmin <= kmax <= 3")));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Pattern ids eligible under the split selector and category filter.
    pub fn pattern_pool(&self) -> Result<Vec<&'static str>> {
        let ids: Vec<&'static str> = catalog()
            .iter()
            .filter(|d| d.split == self.pattern_split_selector)
            .filter(|d| self.categories.as_ref().is_none_or(|cats| cats.contains(&d.category)))
            .map(|d| d.id)
            .collect();
        if ids.is_empty() {
            return Err(Error::Config("no patterns match the split and category filter".into()));
        }
        Ok(ids)
    }

    fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// Random combo from one catalog split.
pub fn sample_combo(split: PatternSplit, seed: u64, range: (usize, usize)) -> Result<PatternCombo> {
    let ids: Vec<&str> = catalog().iter().filter(|d| d.split == split).map(|d| d.id).collect();
    sample_combo_from(&ids, seed, range)
}

/// `k` uniform in `range`, patterns drawn without replacement in seeded shuffle order.
pub fn sample_combo_from(ids: &[&str], seed: u64, range: (usize, usize)) -> Result<PatternCombo> {
    let (kmin, kmax) = range;
    if ids.is_empty() {
        return Err(Error::Config("empty pattern set".into()));
    }
    if kmin < 1 || kmin > kmax {
        return Err(Error::Config(format!("invalid combo size range [{kmin}, {kmax}]")));
    }
    if kmax > ids.len() {
        return Err(Error::Config(format!("combo size {kmax} exceeds the {} available patterns", ids.len())));
    }
    let mut rng = rng_for(seed);
    let k = rng.random_range(kmin..=kmax);
    let mut pool = ids.to_vec();
    pool.shuffle(&mut rng);
    let instances = pool[..k]
        .iter()
        .map(|id| sample_instance(id, rng.next_u64()))
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternCombo::new(instances))
}

/// Full-frame crop: a catalog instance whose output equals its input.
pub fn identity_instance(seed: u64) -> PatternInstance {
    PatternInstance {
        pattern_id: "ResizeCrop".into(),
        params: Params::new()
            .with("scale", ParamValue::Float(1.0))
            .with("ratio", ParamValue::Float(1.0))
            .with("cx", ParamValue::Float(0.5))
            .with("cy", ParamValue::Float(0.5)),
        seed,
    }
}

/// Result of one forge stage.
#[derive(Debug, Default)]
pub struct ForgeOutput {
    pub records: Vec<ProvenanceRecord>,
    pub errors: Vec<ErrorEntry>,
}

impl ForgeOutput {
    /// Turns per-record failures into [`Error::Partial`].
    pub fn check(&self, root: &Path) -> Result<()> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Partial { failed: self.errors.len(), log: root.join(ERROR_LOG) })
        }
    }
}

fn image_path(split: RecordSplit, id: &str) -> String {
    format!("{}/{id}.png", split.dir())
}

struct Job {
    record: ProvenanceRecord,
    source: usize,
}

/// Renders jobs in parallel, writing each image under `root`.
fn render(
    jobs: Vec<Job>,
    sources: &SourceManifest,
    partners: &dyn PartnerSource,
    root: &Path,
    pool: &rayon::ThreadPool,
) -> ForgeOutput {
    let results: Vec<std::result::Result<ProvenanceRecord, ErrorEntry>> = pool.install(|| {
        jobs.into_par_iter()
            .map(|job| {
                let produce = || -> Result<()> {
                    let src = sources.load(job.source)?;
                    let out = if job.record.combo.is_empty() {
                        src
                    } else {
                        apply_combo_with(&src, &job.record.combo, partners)?
                    };
                    out.save_png(root.join(&job.record.path))
                };
                match produce() {
                    Ok(()) => Ok(job.record),
                    Err(e) => Err(ErrorEntry {
                        id: job.record.id.clone(),
                        source_id: job.record.source_id.clone(),
                        error: e.to_string(),
                    }),
                }
            })
            .collect()
    });
    let mut out = ForgeOutput::default();
    for r in results {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(e) => out.errors.push(e),
        }
    }
    out.records.sort_by(|a, b| a.id.cmp(&b.id));
    out.errors.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

fn write_errors(root: &Path, errors: &[ErrorEntry]) -> Result<()> {
    let path = root.join(ERROR_LOG);
    if errors.is_empty() {
        if path.exists() {
            std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    } else {
        write_jsonl(path, errors)
    }
}

/// One untransformed copy plus `replicas_per_original` base-pattern replicas per source.
///
/// Writes `train/*.png` and `train.jsonl` under `root`.
pub fn forge_training_set(sources: &SourceManifest, config: &ForgeConfig, root: &Path) -> Result<ForgeOutput> {
    config.validate()?;
    if config.pattern_split_selector != PatternSplit::Base {
        return Err(Error::Config("training sets must use base patterns".into()));
    }
    let ids = config.pattern_pool()?;
    let mut jobs = Vec::with_capacity(sources.len() * (config.replicas_per_original + 1));
    for (si, src) in sources.entries.iter().enumerate() {
        for r in 0..=config.replicas_per_original {
            let id = format!("{}_{r:03}", src.id);
            let combo = if r == 0 {
                PatternCombo::default()
            } else {
                sample_combo_from(&ids, derive_seed(config.global_seed, &src.id, r as u64), config.combo_size_range)?
            };
            let path = image_path(RecordSplit::Train, &id);
            jobs.push(Job {
                record: ProvenanceRecord { id, source_id: src.id.clone(), split: RecordSplit::Train, combo, pair_id: None, path },
                source: si,
            });
        }
    }
    let pool = config.thread_pool()?;
    let partners = SourcePartners { sources: &sources.entries };
    let out = render(jobs, sources, &partners, root, &pool);
    write_jsonl(root.join(TRAIN_MANIFEST), &out.records)?;
    write_errors(root, &out.errors)?;
    Ok(out)
}

/// Evaluation split: gallery copies, true queries and distractor queries.
#[derive(Debug, Default)]
pub struct EvalOutput {
    pub gallery: Vec<ProvenanceRecord>,
    pub queries: Vec<ProvenanceRecord>,
    pub ground_truth: GroundTruth,
    pub errors: Vec<ErrorEntry>,
}

/// Writes `gallery/`, `queries/`, `gallery.jsonl`, `queries.jsonl` and `gt.csv` under `root`.
pub fn forge_eval_set(
    gallery: &SourceManifest,
    distractors: &SourceManifest,
    config: &ForgeConfig,
    root: &Path,
) -> Result<EvalOutput> {
    config.validate()?;
    if config.pattern_split_selector != PatternSplit::Novel {
        return Err(Error::Config("evaluation queries must use novel patterns".into()));
    }
    if config.n_true_queries > gallery.len() {
        return Err(Error::Config(format!(
            "{} true queries requested but the gallery has {} images",
            config.n_true_queries,
            gallery.len()
        )));
    }
    if config.n_distractor_queries > 0 && distractors.is_empty() {
        return Err(Error::Config("distractor queries requested without distractor sources".into()));
    }
    let gallery_ids = gallery.ids();
    if let Some(shared) = distractors.ids().intersection(&gallery_ids).next() {
        return Err(Error::Config(format!("distractor source `{shared}` also appears in the gallery")));
    }
    let ids = config.pattern_pool()?;
    let g = config.global_seed;

    // one combined source list: gallery first, then distractor sources
    let mut all = gallery.clone();
    all.entries.extend(distractors.entries.iter().cloned());

    let mut jobs = Vec::new();
    for (i, src) in gallery.entries.iter().enumerate() {
        jobs.push(Job {
            record: ProvenanceRecord {
                id: src.id.clone(),
                source_id: src.id.clone(),
                split: RecordSplit::Gallery,
                combo: PatternCombo::default(),
                pair_id: None,
                path: image_path(RecordSplit::Gallery, &src.id),
            },
            source: i,
        });
    }

    let mut gallery_order: Vec<usize> = (0..gallery.len()).collect();
    gallery_order.shuffle(&mut rng_for(derive_seed(g, "eval/true-queries", 0)));
    let mut slots: Vec<(RecordSplit, usize)> = gallery_order[..config.n_true_queries]
        .iter()
        .map(|&i| (RecordSplit::Query, i))
        .chain((0..config.n_distractor_queries).map(|j| (RecordSplit::Distractor, gallery.len() + j % distractors.len().max(1))))
        .collect();
    slots.shuffle(&mut rng_for(derive_seed(g, "eval/query-order", 0)));

    let mut truth = Vec::new();
    for (n, (split, source)) in slots.into_iter().enumerate() {
        let id = format!("Q{n:06}");
        let seed = derive_seed(g, &id, 0);
        let combo = if config.identity_queries {
            PatternCombo::new(vec![identity_instance(seed)])
        } else {
            sample_combo_from(&ids, seed, config.combo_size_range)?
        };
        let source_id = all.entries[source].id.clone();
        if split == RecordSplit::Query {
            truth.push((id.clone(), source_id.clone()));
        }
        let path = image_path(split, &id);
        jobs.push(Job { record: ProvenanceRecord { id, source_id, split, combo, pair_id: None, path }, source });
    }

    let pool = config.thread_pool()?;
    let partners = SourcePartners { sources: &all.entries };
    let rendered = render(jobs, &all, &partners, root, &pool);
    let (gallery_records, queries): (Vec<_>, Vec<_>) =
        rendered.records.into_iter().partition(|r| r.split == RecordSplit::Gallery);
    let ground_truth = GroundTruth::new(truth)?;
    write_jsonl(root.join(GALLERY_MANIFEST), &gallery_records)?;
    write_jsonl(root.join(QUERY_MANIFEST), &queries)?;
    ground_truth.write_csv(root.join(GROUND_TRUTH))?;
    write_errors(root, &rendered.errors)?;
    Ok(EvalOutput { gallery: gallery_records, queries, ground_truth, errors: rendered.errors })
}

/// Distinct combo keys of the true queries, sorted.
pub fn combo_keys_from_queries(queries: &[ProvenanceRecord], gt: &GroundTruth) -> Vec<String> {
    let keys: BTreeSet<String> = queries
        .iter()
        .filter(|q| gt.contains(&q.id))
        .map(|q| q.combo_key())
        .filter(|k| !k.is_empty())
        .collect();
    keys.into_iter().collect()
}

#[derive(Debug, Default)]
pub struct PoolOutput {
    pub entries: Vec<PromptPoolEntry>,
    pub records: Vec<ProvenanceRecord>,
    pub errors: Vec<ErrorEntry>,
}

/// `pool_pairs_per_combo` (original, replica) pairs for each combo key.
///
/// Pool sources must not overlap `excluded_sources` (gallery and query
/// sources). Writes `pool/`, `pool.jsonl` and `pool_records.jsonl`.
pub fn build_prompt_pool(
    sources: &SourceManifest,
    combo_keys: &[String],
    excluded_sources: &BTreeSet<String>,
    config: &ForgeConfig,
    root: &Path,
) -> Result<PoolOutput> {
    config.validate()?;
    if let Some(shared) = sources.entries.iter().find(|e| excluded_sources.contains(&e.id)) {
        return Err(Error::Config(format!("pool source `{}` overlaps gallery or query sources", shared.id)));
    }
    let keys: BTreeSet<String> = combo_keys.iter().cloned().collect();
    if config.pool_pairs_per_combo > 0 && !keys.is_empty() && sources.len() < config.pool_pairs_per_combo {
        return Err(Error::Config(format!(
            "{} disjoint pool sources cannot supply {} pairs per combo",
            sources.len(),
            config.pool_pairs_per_combo
        )));
    }
    let g = config.global_seed;
    let mut jobs = Vec::new();
    let mut entries = Vec::new();
    for (ki, key) in keys.iter().enumerate() {
        let pattern_ids = parse_combo_key(key);
        if pattern_ids.is_empty() {
            return Err(Error::Config("empty combo key".into()));
        }
        for id in &pattern_ids {
            lookup(id)?;
        }
        let mut order: Vec<usize> = (0..sources.len()).collect();
        order.shuffle(&mut rng_for(derive_seed(g, &format!("pool/{key}"), 0)));
        for (j, &source) in order.iter().take(config.pool_pairs_per_combo).enumerate() {
            let pair_id = format!("P{ki:04}_{j:02}");
            let mut patterns: Vec<&str> = pattern_ids.iter().map(String::as_str).collect();
            patterns.shuffle(&mut rng_for(derive_seed(g, &pair_id, 0)));
            let combo = PatternCombo::new(
                patterns
                    .iter()
                    .enumerate()
                    .map(|(i, id)| sample_instance(id, derive_seed(g, &pair_id, i as u64 + 1)))
                    .collect::<Result<Vec<_>>>()?,
            );
            debug_assert_eq!(&combo.key(), key);
            let source_id = sources.entries[source].id.clone();
            let original_id = format!("{pair_id}_o");
            let replica_id = format!("{pair_id}_r");
            let original_path = image_path(RecordSplit::PoolOriginal, &original_id);
            let replica_path = image_path(RecordSplit::PoolReplica, &replica_id);
            entries.push(PromptPoolEntry {
                pair_id: pair_id.clone(),
                combo_key: combo_key(pattern_ids.iter().map(String::as_str)),
                original_id: original_id.clone(),
                replica_id: replica_id.clone(),
                original_path: original_path.clone(),
                replica_path: replica_path.clone(),
            });
            jobs.push(Job {
                record: ProvenanceRecord {
                    id: original_id,
                    source_id: source_id.clone(),
                    split: RecordSplit::PoolOriginal,
                    combo: PatternCombo::default(),
                    pair_id: Some(pair_id.clone()),
                    path: original_path,
                },
                source,
            });
            jobs.push(Job {
                record: ProvenanceRecord {
                    id: replica_id,
                    source_id,
                    split: RecordSplit::PoolReplica,
                    combo,
                    pair_id: Some(pair_id),
                    path: replica_path,
                },
                source,
            });
        }
    }
    let pool = config.thread_pool()?;
    let partners = SourcePartners { sources: &sources.entries };
    let rendered = render(jobs, sources, &partners, root, &pool);
    write_jsonl(root.join(POOL_MANIFEST), &entries)?;
    write_jsonl(root.join(POOL_RECORDS), &rendered.records)?;
    write_errors(root, &rendered.errors)?;
    Ok(PoolOutput { entries, records: rendered.records, errors: rendered.errors })
}

/// Loads the image referenced by a record.
pub fn load_record_image(root: &Path, record: &ProvenanceRecord) -> Result<Image> {
    Image::load(root.join(&record.path))
}

/// Resolves a path relative to a run root.
pub fn resolve(root: &Path, rel: &str) -> PathBuf {
    root.join(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::source_image;

    fn write_sources(dir: &Path, prefix: &str, n: usize, seed0: u64) -> SourceManifest {
        std::fs::create_dir_all(dir).unwrap();
        for i in 0..n {
            source_image(seed0 + i as u64, 40, 32).save_png(dir.join(format!("{prefix}{i:04}.png"))).unwrap();
        }
        SourceManifest::from_dir(dir).unwrap()
    }

    #[test]
    fn combo_sampling_contract() {
        for s in 0..300 {
            let c = sample_combo(PatternSplit::Novel, s, (1, 1)).unwrap();
            assert_eq!(c.instances.len(), 1);
            let c = sample_combo(PatternSplit::Base, s, (1, 3)).unwrap();
            assert_eq!(c.pattern_ids().len(), c.instances.len(), "duplicate pattern in {c:?}");
        }
        assert!(matches!(sample_combo_from(&["Blur", "Rotate"], 0, (1, 3)), Err(Error::Config(_))));
        assert_eq!(sample_combo(PatternSplit::Base, 9, (1, 3)).unwrap(), sample_combo(PatternSplit::Base, 9, (1, 3)).unwrap());
    }

    #[test]
    fn combo_size_is_uniform() {
        let mut counts = [0usize; 4];
        for s in 0..10_000u64 {
            counts[sample_combo(PatternSplit::Novel, s, (1, 3)).unwrap().instances.len()] += 1;
        }
        for (k, &n) in counts.iter().enumerate().skip(1) {
            let f = n as f64 / 10_000.0;
            assert!((f - 1.0 / 3.0).abs() <= 0.02, "k={k}: {f}");
        }
    }

    #[test]
    fn config_validation() {
        let mut c = ForgeConfig { combo_size_range: (0, 2), ..ForgeConfig::default() };
        assert!(c.validate().is_err());
        c.combo_size_range = (2, 4);
        assert!(c.validate().is_err());
        c.combo_size_range = (3, 2);
        assert!(c.validate().is_err());
    }

    #[test]
    fn training_counts_and_hygiene() {
        let dir = tempfile::tempdir().unwrap();
        let sources = write_sources(&dir.path().join("src"), "s", 5, 0);
        let cfg = ForgeConfig { replicas_per_original: 3, ..ForgeConfig::default() };
        let out = forge_training_set(&sources, &cfg, &dir.path().join("run")).unwrap();
        assert_eq!(out.records.len(), 20);
        assert!(out.errors.is_empty());
        let base: BTreeSet<_> = crate::patterns::split_ids(PatternSplit::Base).collect();
        for r in &out.records {
            assert!(r.combo.pattern_ids().iter().all(|p| base.contains(p)));
            assert_eq!(r.combo.is_empty(), r.id.ends_with("_000"));
            assert!(dir.path().join("run").join(&r.path).is_file());
        }
        let manifest: Vec<ProvenanceRecord> = read_jsonl(dir.path().join("run/train.jsonl")).unwrap();
        assert_eq!(manifest, out.records);
    }

    #[test]
    fn unreadable_source_is_reported_per_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut sources = write_sources(&dir.path().join("src"), "s", 2, 0);
        let bad = dir.path().join("src/broken.png");
        std::fs::write(&bad, b"not a png").unwrap();
        sources.entries.push(SourceEntry { id: "broken".into(), path: bad });
        let cfg = ForgeConfig { replicas_per_original: 1, ..ForgeConfig::default() };
        let root = dir.path().join("run");
        let out = forge_training_set(&sources, &cfg, &root).unwrap();
        assert_eq!(out.records.len(), 4);
        assert_eq!(out.errors.len(), 2);
        assert!(matches!(out.check(&root), Err(Error::Partial { failed: 2, .. })));
        assert!(root.join(ERROR_LOG).is_file());
    }

    #[test]
    fn eval_and_pool_invariants() {
        let dir = tempfile::tempdir().unwrap();
        let gallery = write_sources(&dir.path().join("gal"), "g", 30, 100);
        let distract = write_sources(&dir.path().join("dis"), "d", 10, 500);
        let pool_src = write_sources(&dir.path().join("pool"), "p", 4, 900);
        let cfg = ForgeConfig {
            n_true_queries: 12,
            n_distractor_queries: 20,
            pool_pairs_per_combo: 2,
            pattern_split_selector: PatternSplit::Novel,
            combo_size_range: (1, 2),
            ..ForgeConfig::default()
        };
        let root = dir.path().join("run");
        let eval = forge_eval_set(&gallery, &distract, &cfg, &root).unwrap();
        assert_eq!(eval.queries.len(), 32);
        assert_eq!(eval.ground_truth.len(), 12);
        assert_eq!(eval.gallery.len(), 30);
        let novel: BTreeSet<_> = crate::patterns::split_ids(PatternSplit::Novel).collect();
        let gallery_ids = gallery.ids();
        for q in &eval.queries {
            assert!(!q.combo.is_empty());
            assert!(q.combo.pattern_ids().iter().all(|p| novel.contains(p)));
            match q.split {
                RecordSplit::Query => assert_eq!(eval.ground_truth.get(&q.id), Some(q.source_id.as_str())),
                RecordSplit::Distractor => {
                    assert!(!eval.ground_truth.contains(&q.id));
                    assert!(!gallery_ids.contains(q.source_id.as_str()));
                }
                other => panic!("unexpected split {other:?}"),
            }
        }

        let keys = combo_keys_from_queries(&eval.queries, &eval.ground_truth);
        let mut excluded: BTreeSet<String> = gallery_ids.iter().map(|s| s.to_string()).collect();
        excluded.extend(distract.ids().iter().map(|s| s.to_string()));
        let pool = build_prompt_pool(&pool_src, &keys, &excluded, &cfg, &root).unwrap();
        assert_eq!(pool.entries.len(), keys.len() * 2);
        assert_eq!(pool.records.len(), keys.len() * 4);
        for key in &keys {
            assert_eq!(pool.entries.iter().filter(|e| &e.combo_key == key).count(), 2);
        }
        for r in pool.records.iter().filter(|r| r.split == RecordSplit::PoolReplica) {
            let entry = pool.entries.iter().find(|e| Some(&e.pair_id) == r.pair_id.as_ref()).unwrap();
            assert_eq!(r.combo_key(), entry.combo_key);
            assert!(root.join(&r.path).is_file());
        }

        // overlapping pool sources are rejected
        assert!(matches!(build_prompt_pool(&gallery, &keys, &excluded, &cfg, &root), Err(Error::Config(_))));
        let greedy = ForgeConfig { pool_pairs_per_combo: 5, ..cfg.clone() };
        assert!(matches!(build_prompt_pool(&pool_src, &keys, &excluded, &greedy, &root), Err(Error::Config(_))));
        let too_many = ForgeConfig { n_true_queries: 31, ..cfg };
        assert!(matches!(forge_eval_set(&gallery, &distract, &too_many, &root), Err(Error::Config(_))));
    }

    #[test]
    fn single_pair_pool() {
        let dir = tempfile::tempdir().unwrap();
        let pool_src = write_sources(&dir.path().join("pool"), "p", 3, 0);
        let cfg = ForgeConfig { pool_pairs_per_combo: 1, ..ForgeConfig::default() };
        let keys = vec!["Mosaic".to_string(), "Pyramid+Swirl".to_string()];
        let out = build_prompt_pool(&pool_src, &keys, &BTreeSet::new(), &cfg, dir.path()).unwrap();
        assert_eq!(out.entries.len(), 2);
    }
}
