//! Ranking metrics: micro average precision, recall@1 and pattern-retrieval accuracy.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::matcher::select::PromptAssignment;
use crate::matcher::MatchList;

/// True query id to gallery source id. Distractors are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    map: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GtRow {
    query_id: String,
    source_id: String,
}

impl GroundTruth {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (q, s) in pairs {
            if let Some(prev) = map.insert(q.clone(), s) {
                return Err(Error::Input(format!("query `{q}` appears twice in the ground truth (first -> `{prev}`)")));
            }
        }
        Ok(Self { map })
    }

    pub fn get(&self, query_id: &str) -> Option<&str> {
        self.map.get(query_id).map(String::as_str)
    }

    pub fn contains(&self, query_id: &str) -> bool {
        self.map.contains_key(query_id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(q, s)| (q.as_str(), s.as_str()))
    }

    /// CSV with header `query_id,source_id`, rows sorted by query id.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let csv_err = |source| Error::Csv { path: path.into(), source };
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
        w.write_record(["query_id", "source_id"]).map_err(csv_err)?;
        for (q, s) in &self.map {
            w.write_record([q, s]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let csv_err = |source| Error::Csv { path: path.into(), source };
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["query_id", "source_id"] {
            return Err(Error::Input(format!("{}: expected header query_id,source_id", path.display())));
        }
        let rows = r
            .deserialize()
            .map(|row| row.map(|r: GtRow| (r.query_id, r.source_id)).map_err(csv_err))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub query_id: String,
    pub gallery_id: String,
    pub score: f64,
}

/// The top-ranked hit of every query.
pub fn predictions_from(matches: &MatchList) -> Vec<Prediction> {
    matches
        .top1()
        .map(|(q, h)| Prediction { query_id: q.to_owned(), gallery_id: h.gallery_id.clone(), score: h.score })
        .collect()
}

/// Area under the precision-recall curve of a global ranking of predictions.
///
/// Rows are ordered by descending score, ties by `(query_id, gallery_id)`.
/// Distractor rows occupy ranks but add nothing to the numerator or to `G`.
pub fn micro_average_precision(preds: &[Prediction], gt: &GroundTruth) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::Input("ground truth has no true queries".into()));
    }
    let mut seen = HashSet::new();
    for p in preds {
        if !seen.insert(p.query_id.as_str()) {
            return Err(Error::Input(format!("query `{}` has more than one prediction row", p.query_id)));
        }
        if !p.score.is_finite() {
            return Err(Error::Input(format!("query `{}` has a non-finite score", p.query_id)));
        }
    }
    let mut rows: Vec<&Prediction> = preds.iter().collect();
    rows.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.query_id.cmp(&b.query_id))
            .then_with(|| a.gallery_id.cmp(&b.gallery_id))
    });
    let mut correct = 0usize;
    let mut sum = 0.0;
    for (i, p) in rows.iter().enumerate() {
        if gt.get(&p.query_id) == Some(p.gallery_id.as_str()) {
            correct += 1;
            sum += correct as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / gt.len() as f64)
}

/// Fraction of true queries whose first hit is their source. Missing queries count as misses.
pub fn recall_at_1(matches: &MatchList, gt: &GroundTruth) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::Input("ground truth has no true queries".into()));
    }
    let hits = matches.top1().filter(|(q, h)| gt.get(q) == Some(h.gallery_id.as_str())).count();
    Ok(hits as f64 / gt.len() as f64)
}

/// `|Pq ∩ Ps| / |Pq|` for one query.
pub fn pattern_overlap(query: &BTreeSet<String>, prompt: &BTreeSet<String>) -> Result<f64> {
    if query.is_empty() {
        return Err(Error::Input("query has an empty pattern set".into()));
    }
    Ok(query.intersection(prompt).count() as f64 / query.len() as f64)
}

/// Mean pattern overlap between each true query and its first assigned pair.
///
/// `self:` pairs stand for the query's own combo.
pub fn pattern_accuracy(
    assignment: &PromptAssignment,
    query_combos: &BTreeMap<String, BTreeSet<String>>,
    pool_combos: &BTreeMap<String, BTreeSet<String>>,
    gt: &GroundTruth,
) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::Input("ground truth has no true queries".into()));
    }
    let mut sum = 0.0;
    for (q, _) in gt.iter() {
        let pq = query_combos.get(q).ok_or_else(|| Error::Input(format!("no combo recorded for query `{q}`")))?;
        let pair = assignment.first(q).ok_or_else(|| Error::Input(format!("query `{q}` has no assigned pair")))?;
        let ps = if pair.is_self() {
            pq
        } else {
            pool_combos
                .get(&pair.pair_id)
                .ok_or_else(|| Error::Input(format!("pair `{}` is not in the pool", pair.pair_id)))?
        };
        sum += pattern_overlap(pq, ps)?;
    }
    Ok(sum / gt.len() as f64)
}

/// Expected overlap of a query with a uniformly drawn pool pair.
pub fn expected_random_accuracy(query: &BTreeSet<String>, pool: &[BTreeSet<String>]) -> Result<f64> {
    if pool.is_empty() {
        return Err(Error::Input("empty pool".into()));
    }
    let mut sum = 0.0;
    for ps in pool {
        sum += pattern_overlap(query, ps)?;
    }
    Ok(sum / pool.len() as f64)
}

pub fn round6(v: f64) -> f64 {
    format!("{v:.6}").parse().unwrap_or(v)
}

fn fixed6<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = RawValue::from_string(format!("{v:.6}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

fn fixed6_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => fixed6(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub queries: usize,
    pub true_queries: usize,
    pub gallery: usize,
}

/// Metrics for one evaluation run. Rates are rounded to 6 decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(serialize_with = "fixed6")]
    pub mu_ap: f64,
    #[serde(serialize_with = "fixed6")]
    pub recall_at_1: f64,
    #[serde(serialize_with = "fixed6_opt")]
    pub pattern_acc: Option<f64>,
    pub counts: Counts,
    pub config: serde_json::Value,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
    }
}

/// Pattern sets needed for pattern accuracy.
pub struct PatternInputs<'a> {
    pub assignment: &'a PromptAssignment,
    pub query_combos: &'a BTreeMap<String, BTreeSet<String>>,
    pub pool_combos: &'a BTreeMap<String, BTreeSet<String>>,
}

/// Id universes from the forge manifests, used for consistency checks and counts.
#[derive(Debug, Default, Clone)]
pub struct IdSpaces {
    pub queries: Option<BTreeSet<String>>,
    pub gallery: Option<BTreeSet<String>>,
}

fn mismatch(what: &str, ids: Vec<&str>) -> Error {
    let shown: Vec<&str> = ids.iter().take(10).copied().collect();
    let more = if ids.len() > shown.len() { format!(" (+{} more)", ids.len() - shown.len()) } else { String::new() };
    Error::Input(format!("{what}: {}{more}", shown.join(", ")))
}

pub fn build_report(
    matches: &MatchList,
    gt: &GroundTruth,
    spaces: &IdSpaces,
    patterns: Option<PatternInputs<'_>>,
    config: serde_json::Value,
) -> Result<EvalReport> {
    if let Some(queries) = &spaces.queries {
        let stray: Vec<&str> =
            matches.queries.iter().map(|q| q.query_id.as_str()).filter(|q| !queries.contains(*q)).collect();
        if !stray.is_empty() {
            return Err(mismatch("match queries missing from the query manifest", stray));
        }
        let stray: Vec<&str> = gt.iter().map(|(q, _)| q).filter(|q| !queries.contains(*q)).collect();
        if !stray.is_empty() {
            return Err(mismatch("ground-truth queries missing from the query manifest", stray));
        }
    }
    if let Some(gallery) = &spaces.gallery {
        let stray: BTreeSet<&str> = matches
            .queries
            .iter()
            .flat_map(|q| q.hits.iter().map(|h| h.gallery_id.as_str()))
            .filter(|g| !gallery.contains(*g))
            .collect();
        if !stray.is_empty() {
            return Err(mismatch("matched gallery ids missing from the gallery manifest", stray.into_iter().collect()));
        }
        let stray: Vec<&str> = gt.iter().map(|(_, s)| s).filter(|s| !gallery.contains(*s)).collect();
        if !stray.is_empty() {
            return Err(mismatch("ground-truth sources missing from the gallery manifest", stray));
        }
    }
    let preds = predictions_from(matches);
    let mu_ap = micro_average_precision(&preds, gt)?;
    let recall = recall_at_1(matches, gt)?;
    let pattern_acc = match patterns {
        Some(p) => Some(pattern_accuracy(p.assignment, p.query_combos, p.pool_combos, gt)?),
        None => None,
    };
    let counts = Counts {
        queries: spaces.queries.as_ref().map_or(matches.queries.len(), BTreeSet::len),
        true_queries: gt.len(),
        gallery: spaces.gallery.as_ref().map_or_else(
            || {
                matches
                    .queries
                    .iter()
                    .flat_map(|q| q.hits.iter().map(|h| h.gallery_id.as_str()))
                    .collect::<BTreeSet<_>>()
                    .len()
            },
            BTreeSet::len,
        ),
    };
    Ok(EvalReport {
        mu_ap: round6(mu_ap),
        recall_at_1: round6(recall),
        pattern_acc: pattern_acc.map(round6),
        counts,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::{Hit, QueryMatches};

    fn pred(q: &str, g: &str, s: f64) -> Prediction {
        Prediction { query_id: q.into(), gallery_id: g.into(), score: s }
    }

    fn gt(pairs: &[(&str, &str)]) -> GroundTruth {
        GroundTruth::new(pairs.iter().map(|(q, s)| (q.to_string(), s.to_string()))).unwrap()
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn worked_examples() {
        let g = gt(&[("a", "x"), ("c", "z")]);
        let preds = [pred("a", "x", 0.9), pred("b", "y", 0.8), pred("c", "z", 0.7)];
        assert!((micro_average_precision(&preds, &g).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        let g = gt(&[("b", "y")]);
        let preds = [pred("a", "x", 0.95), pred("b", "y", 0.9)];
        assert_eq!(micro_average_precision(&preds, &g).unwrap(), 0.5);
        assert_eq!(micro_average_precision(&[pred("a", "x", 0.1)], &gt(&[("a", "x")])).unwrap(), 1.0);
    }

    #[test]
    fn map_input_errors() {
        let g = gt(&[("a", "x")]);
        assert!(matches!(micro_average_precision(&[pred("a", "x", 1.0), pred("a", "y", 0.5)], &g), Err(Error::Input(_))));
        assert!(matches!(micro_average_precision(&[pred("a", "x", f64::NAN)], &g), Err(Error::Input(_))));
        assert!(matches!(micro_average_precision(&[], &GroundTruth::default()), Err(Error::Input(_))));
        assert!(GroundTruth::new(vec![("a".into(), "x".into()), ("a".into(), "y".into())]).is_err());
    }

    #[test]
    fn ties_follow_query_then_gallery_id() {
        // the wrong row "a" sorts before the correct row "b" at equal score
        let g = gt(&[("b", "y")]);
        let preds = [pred("b", "y", 0.5), pred("a", "q", 0.5)];
        assert_eq!(micro_average_precision(&preds, &g).unwrap(), 0.5);
    }

    fn list(rows: &[(&str, &str, f64)]) -> MatchList {
        MatchList {
            queries: rows
                .iter()
                .map(|(q, g, s)| QueryMatches { query_id: q.to_string(), hits: vec![Hit { gallery_id: g.to_string(), score: *s }] })
                .collect(),
        }
    }

    #[test]
    fn recall_examples() {
        let g = gt(&[("a", "x"), ("b", "y"), ("c", "z")]);
        assert!((recall_at_1(&list(&[("a", "x", 0.9), ("b", "y", 0.8), ("c", "w", 0.7)]), &g).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(recall_at_1(&list(&[("a", "x", 0.9), ("b", "y", 0.8), ("c", "z", 0.7)]), &g).unwrap(), 1.0);
        let g5 = gt(&[("a", "1"), ("b", "2"), ("c", "3"), ("d", "4"), ("e", "5")]);
        assert_eq!(recall_at_1(&list(&[("d1", "1", 0.9), ("d2", "2", 0.9)]), &g5).unwrap(), 0.0);
    }

    #[test]
    fn pattern_accuracy_examples() {
        assert_eq!(pattern_overlap(&set(&["Blur", "Rotate"]), &set(&["Rotate", "Mosaic"])).unwrap(), 0.5);
        assert_eq!(pattern_overlap(&set(&["Swirl"]), &set(&["Mosaic"])).unwrap(), 0.0);
        assert!(matches!(pattern_overlap(&set(&[]), &set(&["Mosaic"])), Err(Error::Input(_))));

        use crate::matcher::AssignedPair;
        let pair = |id: &str| vec![AssignedPair { pair_id: id.into(), original_id: "o".into(), replica_id: "r".into() }];
        let mut a = PromptAssignment::default();
        a.pairs.insert("q1".into(), pair("p1"));
        a.pairs.insert("q2".into(), pair("p2"));
        a.pairs.insert("q3".into(), pair("p3"));
        a.pairs.insert("d1".into(), pair("p3"));
        let qc = BTreeMap::from([
            ("q1".to_string(), set(&["Blur", "Rotate"])),
            ("q2".to_string(), set(&["Mosaic", "Pyramid"])),
            ("q3".to_string(), set(&["Swirl"])),
            ("d1".to_string(), set(&["Swirl"])),
        ]);
        let pc = BTreeMap::from([
            ("p1".to_string(), set(&["Rotate", "Mosaic"])),
            ("p2".to_string(), set(&["Mosaic", "Pyramid"])),
            ("p3".to_string(), set(&["Mosaic"])),
        ]);
        let g = gt(&[("q1", "s"), ("q2", "s"), ("q3", "s")]);
        assert_eq!(pattern_accuracy(&a, &qc, &pc, &g).unwrap(), 0.5);
        a.pairs.remove("q2");
        assert!(matches!(pattern_accuracy(&a, &qc, &pc, &g), Err(Error::Input(_))));
    }

    #[test]
    fn random_expectation_closed_form() {
        let pool = [set(&["A"]), set(&["B"]), set(&["C"])];
        assert!((expected_random_accuracy(&set(&["A", "B"]), &pool).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn report_json_shape_and_roundtrip() {
        let g = gt(&[("a", "x"), ("c", "z")]);
        let m = list(&[("a", "x", 0.9), ("b", "y", 0.8), ("c", "z", 0.7)]);
        let report = build_report(&m, &g, &IdSpaces::default(), None, serde_json::json!({"k": 1})).unwrap();
        let text = report.to_json();
        assert!(text.contains("\"mu_ap\": 0.833333"), "{text}");
        assert!(text.contains("\"recall_at_1\": 1.000000"), "{text}");
        assert!(text.contains("\"pattern_acc\": null"), "{text}");
        let back: EvalReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(report.counts, Counts { queries: 3, true_queries: 2, gallery: 3 });
    }

    #[test]
    fn report_rejects_foreign_ids() {
        let g = gt(&[("a", "x")]);
        let m = list(&[("a", "x", 0.9), ("zz", "x", 0.8)]);
        let spaces = IdSpaces { queries: Some(set(&["a", "b"])), gallery: Some(set(&["x"])) };
        match build_report(&m, &g, &spaces, None, serde_json::Value::Null) {
            Err(Error::Input(msg)) => assert!(msg.contains("zz"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let m = list(&[("a", "nope", 0.9)]);
        assert!(matches!(build_report(&m, &g, &spaces, None, serde_json::Value::Null), Err(Error::Input(_))));
    }

    #[test]
    fn gt_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gt.csv");
        let g = gt(&[("Q000002", "b"), ("Q000001", "a")]);
        g.write_csv(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "query_id,source_id\nQ000001,a\nQ000002,b\n");
        assert_eq!(GroundTruth::read_csv(&p).unwrap(), g);
    }
}
