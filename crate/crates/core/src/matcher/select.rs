//! Prompt selection: which (original, replica) pairs each query is shown.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::descriptor::DescriptorSet;
use super::search::search_topk;
use crate::error::{Error, Result};
use crate::forge::{PromptPoolEntry, ProvenanceRecord};
use crate::metrics::GroundTruth;
use crate::patterns::parse_combo_key;
use crate::seed::{derive_seed, rng_for};

/// Pair ids of this form stand for the query's own (original, query) pair.
pub const SELF_PAIR_PREFIX: &str = "self:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Random,
    Feature,
    GroundTruth,
    Wrong,
    SelfUpper,
    ZeroShot,
}

impl SelectionMode {
    pub const ALL: [SelectionMode; 6] = [
        SelectionMode::Random,
        SelectionMode::Feature,
        SelectionMode::GroundTruth,
        SelectionMode::Wrong,
        SelectionMode::SelfUpper,
        SelectionMode::ZeroShot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Random => "random",
            SelectionMode::Feature => "feature",
            SelectionMode::GroundTruth => "ground_truth",
            SelectionMode::Wrong => "wrong",
            SelectionMode::SelfUpper => "self_upper",
            SelectionMode::ZeroShot => "zero_shot",
        }
    }

    fn needs_gt(self) -> bool {
        matches!(self, SelectionMode::GroundTruth | SelectionMode::Wrong | SelectionMode::SelfUpper)
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown selection mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignedPair {
    pub pair_id: String,
    pub original_id: String,
    pub replica_id: String,
}

impl AssignedPair {
    fn from_entry(e: &PromptPoolEntry) -> Self {
        Self { pair_id: e.pair_id.clone(), original_id: e.original_id.clone(), replica_id: e.replica_id.clone() }
    }

    pub fn is_self(&self) -> bool {
        self.pair_id.starts_with(SELF_PAIR_PREFIX)
    }
}

/// Ordered prompt pairs per query; queries without pairs are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptAssignment {
    pub pairs: BTreeMap<String, Vec<AssignedPair>>,
}

impl PromptAssignment {
    pub fn first(&self, query_id: &str) -> Option<&AssignedPair> {
        self.pairs.get(query_id).and_then(|v| v.first())
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.values().all(Vec::is_empty)
    }
}

pub struct SelectInputs<'a> {
    /// Query manifest; its provenance supplies each query's combo.
    pub queries: &'a [ProvenanceRecord],
    pub pool: &'a [PromptPoolEntry],
    pub gt: Option<&'a GroundTruth>,
    pub query_features: Option<&'a DescriptorSet>,
    /// Rows keyed by pair id.
    pub pool_features: Option<&'a DescriptorSet>,
}

fn overlap(query: &BTreeSet<&str>, pair: &BTreeSet<String>) -> usize {
    pair.iter().filter(|p| query.contains(p.as_str())).count()
}

pub fn select_prompts(mode: SelectionMode, inputs: &SelectInputs<'_>, n: usize, seed: u64) -> Result<PromptAssignment> {
    if mode == SelectionMode::ZeroShot {
        return Ok(PromptAssignment::default());
    }
    if n == 0 {
        return Err(Error::Config(format!("mode {mode} needs N >= 1")));
    }
    if mode.needs_gt() && inputs.gt.is_none() {
        return Err(Error::Config(format!("mode {mode} needs the ground-truth file")));
    }
    if mode != SelectionMode::SelfUpper && inputs.pool.is_empty() {
        return Err(Error::Config("the prompt pool is empty".into()));
    }
    let pool_sets: Vec<BTreeSet<String>> = inputs.pool.iter().map(|e| parse_combo_key(&e.combo_key)).collect();
    let mut out = PromptAssignment::default();

    if mode == SelectionMode::Feature {
        let (Some(qf), Some(pf)) = (inputs.query_features, inputs.pool_features) else {
            return Err(Error::Config("feature mode needs both query and pool feature files".into()));
        };
        let by_pair: BTreeMap<&str, &PromptPoolEntry> = inputs.pool.iter().map(|e| (e.pair_id.as_str(), e)).collect();
        if let Some(stray) = pf.ids().iter().find(|id| !by_pair.contains_key(id.as_str())) {
            return Err(Error::Input(format!("pool feature id `{stray}` is not a pair in the pool manifest")));
        }
        let wanted: Vec<String> = inputs.queries.iter().map(|q| q.id.clone()).collect();
        let matches = search_topk(&qf.subset(&wanted)?, pf, n)?;
        for qm in matches.queries {
            let pairs = qm.hits.iter().map(|h| AssignedPair::from_entry(by_pair[h.gallery_id.as_str()])).collect();
            out.pairs.insert(qm.query_id, pairs);
        }
        return Ok(out);
    }

    for q in inputs.queries {
        let q_set = q.combo.pattern_ids();
        let mut rng = rng_for(derive_seed(seed, &q.id, 0));
        let pairs: Vec<AssignedPair> = match mode {
            SelectionMode::Random => {
                if n > inputs.pool.len() {
                    return Err(Error::Config(format!("N = {n} exceeds the pool size {}", inputs.pool.len())));
                }
                sample(&mut rng, inputs.pool.len(), n).into_iter().map(|i| AssignedPair::from_entry(&inputs.pool[i])).collect()
            }
            SelectionMode::GroundTruth => {
                let key = q.combo_key();
                let mut exact: Vec<usize> = (0..inputs.pool.len()).filter(|&i| inputs.pool[i].combo_key == key).collect();
                if exact.is_empty() {
                    // only distractors can land here: rank by overlap, then pair id
                    exact = (0..inputs.pool.len()).collect();
                    exact.sort_by_key(|&i| std::cmp::Reverse(overlap(&q_set, &pool_sets[i])));
                } else {
                    exact.shuffle(&mut rng);
                }
                exact.into_iter().take(n).map(|i| AssignedPair::from_entry(&inputs.pool[i])).collect()
            }
            SelectionMode::Wrong => {
                let mut disjoint: Vec<usize> =
                    (0..inputs.pool.len()).filter(|&i| overlap(&q_set, &pool_sets[i]) == 0).collect();
                if disjoint.is_empty() {
                    return Err(Error::Selection(format!(
                        "no pool pair shares no pattern with query `{}` ({})",
                        q.id,
                        q.combo_key()
                    )));
                }
                disjoint.shuffle(&mut rng);
                disjoint.into_iter().take(n).map(|i| AssignedPair::from_entry(&inputs.pool[i])).collect()
            }
            SelectionMode::SelfUpper => {
                let original = inputs.gt.and_then(|gt| gt.get(&q.id)).unwrap_or(&q.source_id);
                vec![AssignedPair {
                    pair_id: format!("{SELF_PAIR_PREFIX}{}", q.id),
                    original_id: original.to_owned(),
                    replica_id: q.id.clone(),
                }]
            }
            SelectionMode::Feature | SelectionMode::ZeroShot => unreachable!(),
        };
        out.pairs.insert(q.id.clone(), pairs);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentRow {
    query_id: String,
    rank: usize,
    pair_id: String,
    original_id: String,
    replica_id: String,
}

/// CSV `query_id,rank,pair_id,original_id,replica_id`, rank starting at 1.
pub fn write_assignment(assignment: &PromptAssignment, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(["query_id", "rank", "pair_id", "original_id", "replica_id"]).map_err(csv_err)?;
    for (q, pairs) in &assignment.pairs {
        for (i, p) in pairs.iter().enumerate() {
            w.serialize(AssignmentRow {
                query_id: q.clone(),
                rank: i + 1,
                pair_id: p.pair_id.clone(),
                original_id: p.original_id.clone(),
                replica_id: p.replica_id.clone(),
            })
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_assignment(path: impl AsRef<Path>) -> Result<PromptAssignment> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["query_id", "rank", "pair_id", "original_id", "replica_id"] {
        return Err(Error::Input(format!("{}: unexpected assignment header {:?}", path.display(), headers)));
    }
    let mut ranked: BTreeMap<String, Vec<(usize, AssignedPair)>> = BTreeMap::new();
    for row in r.deserialize() {
        let row: AssignmentRow = row.map_err(csv_err)?;
        ranked.entry(row.query_id).or_default().push((
            row.rank,
            AssignedPair { pair_id: row.pair_id, original_id: row.original_id, replica_id: row.replica_id },
        ));
    }
    let mut out = PromptAssignment::default();
    for (q, mut rows) in ranked {
        rows.sort_by_key(|(rank, _)| *rank);
        if rows.iter().enumerate().any(|(i, (rank, _))| *rank != i + 1) {
            return Err(Error::Input(format!("{}: ranks for query `{q}` are not 1..N", path.display())));
        }
        out.pairs.insert(q, rows.into_iter().map(|(_, p)| p).collect());
    }
    Ok(out)
}
