use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::descriptor::{dot, from_parts, norm, DescriptorSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub gallery_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMatches {
    pub query_id: String,
    /// Descending score, ties by ascending gallery id.
    pub hits: Vec<Hit>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchList {
    pub queries: Vec<QueryMatches>,
}

/// Descending score, then ascending gallery id.
pub fn rank_order(a: &Hit, b: &Hit) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.gallery_id.cmp(&b.gallery_id))
}

impl MatchList {
    pub fn get(&self, query_id: &str) -> Option<&QueryMatches> {
        self.queries.iter().find(|q| q.query_id == query_id)
    }

    pub fn top1(&self) -> impl Iterator<Item = (&str, &Hit)> {
        self.queries.iter().filter_map(|q| q.hits.first().map(|h| (q.query_id.as_str(), h)))
    }
}

/// Exact cosine top-k of every query against the whole gallery.
pub fn search_topk(queries: &DescriptorSet, gallery: &DescriptorSet, k: usize) -> Result<MatchList> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if queries.dim() != gallery.dim() {
        return Err(Error::Shape(format!(
            "query dim {} does not match gallery dim {}",
            queries.dim(),
            gallery.dim()
        )));
    }
    // tie rule by id, precomputed as a rank so the inner sort avoids string compares
    let mut by_id: Vec<usize> = (0..gallery.len()).collect();
    by_id.sort_by(|&a, &b| gallery.ids()[a].cmp(&gallery.ids()[b]));
    let mut id_rank = vec![0usize; gallery.len()];
    for (rank, &i) in by_id.iter().enumerate() {
        id_rank[i] = rank;
    }
    let k = k.min(gallery.len());
    let g_norms: Vec<f64> = (0..gallery.len()).map(|gi| norm(gallery.row(gi))).collect();
    let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(id_rank[a.1].cmp(&id_rank[b.1]));

    let results: Vec<QueryMatches> = (0..queries.len())
        .into_par_iter()
        .map(|qi| {
            let q = queries.row(qi);
            let nq = norm(q);
            let mut scored: Vec<(f64, usize)> =
                (0..gallery.len()).map(|gi| (from_parts(dot(q, gallery.row(gi)), nq, g_norms[gi]), gi)).collect();
            if k < scored.len() {
                scored.select_nth_unstable_by(k - 1, order);
                scored.truncate(k);
            }
            scored.sort_unstable_by(order);
            QueryMatches {
                query_id: queries.ids()[qi].clone(),
                hits: scored
                    .into_iter()
                    .map(|(s, gi)| Hit { gallery_id: gallery.ids()[gi].clone(), score: s })
                    .collect(),
            }
        })
        .collect();
    Ok(MatchList { queries: results })
}

/// Per (query, gallery) maximum over several match lists, re-ranked.
pub fn aggregate_max(lists: &[MatchList]) -> Result<MatchList> {
    let (first, rest) = lists.split_first().ok_or_else(|| Error::Shape("no match lists to aggregate".into()))?;
    let query_ids = |l: &MatchList| l.queries.iter().map(|q| q.query_id.clone()).collect::<BTreeSet<_>>();
    let expected = query_ids(first);
    if expected.len() != first.queries.len() {
        return Err(Error::Shape("duplicate query in match list".into()));
    }
    let mut merged: BTreeMap<&str, HashMap<&str, f64>> = BTreeMap::new();
    for q in &first.queries {
        merged.insert(&q.query_id, q.hits.iter().map(|h| (h.gallery_id.as_str(), h.score)).collect());
    }
    for list in rest {
        if query_ids(list) != expected || list.queries.len() != expected.len() {
            return Err(Error::Shape("match lists cover different queries".into()));
        }
        for q in &list.queries {
            let slot = merged.get_mut(q.query_id.as_str()).expect("query ids checked");
            if q.hits.len() != slot.len() || q.hits.iter().any(|h| !slot.contains_key(h.gallery_id.as_str())) {
                return Err(Error::Shape(format!("query `{}` has different gallery ids across lists", q.query_id)));
            }
            for h in &q.hits {
                let s = slot.get_mut(h.gallery_id.as_str()).expect("membership checked");
                if h.score > *s {
                    *s = h.score;
                }
            }
        }
    }
    let queries = first
        .queries
        .iter()
        .map(|q| {
            let mut hits: Vec<Hit> = merged[q.query_id.as_str()]
                .iter()
                .map(|(g, s)| Hit { gallery_id: (*g).to_owned(), score: *s })
                .collect();
            hits.sort_by(rank_order);
            QueryMatches { query_id: q.query_id.clone(), hits }
        })
        .collect();
    Ok(MatchList { queries })
}

/// `%.9g`-style formatting.
pub fn format_sig(v: f64, sig: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let strip = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s.to_owned()
        }
    };
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip(mantissa), exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        strip(&format!("{:.*}", decimals, v))
    }
}

pub fn write_matches(list: &MatchList, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("query_id,gallery_id,score\n");
    for q in &list.queries {
        for h in &q.hits {
            out.push_str(&format!("{},{},{}\n", q.query_id, h.gallery_id, format_sig(h.score, 9)));
        }
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct MatchRow {
    query_id: String,
    gallery_id: String,
    score: f64,
}

pub fn read_matches(path: impl AsRef<Path>) -> Result<MatchList> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv { path: path.into(), source })?;
    let headers = reader.headers().map_err(|source| Error::Csv { path: path.into(), source })?.clone();
    if headers.iter().collect::<Vec<_>>() != ["query_id", "gallery_id", "score"] {
        return Err(Error::Input(format!("{}: expected header query_id,gallery_id,score", path.display())));
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_query: HashMap<String, Vec<Hit>> = HashMap::new();
    for row in reader.deserialize() {
        let row: MatchRow = row.map_err(|source| Error::Csv { path: path.into(), source })?;
        if !row.score.is_finite() {
            return Err(Error::Input(format!("non-finite score for `{}`", row.query_id)));
        }
        let hits = by_query.entry(row.query_id.clone()).or_insert_with(|| {
            order.push(row.query_id.clone());
            Vec::new()
        });
        hits.push(Hit { gallery_id: row.gallery_id, score: row.score });
    }
    let queries = order
        .into_iter()
        .map(|qid| {
            let mut hits = by_query.remove(&qid).unwrap_or_default();
            hits.sort_by(rank_order);
            QueryMatches { query_id: qid, hits }
        })
        .collect();
    Ok(MatchList { queries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str], rows: Vec<Vec<f32>>) -> DescriptorSet {
        DescriptorSet::from_rows(ids.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn orthogonal_toy() {
        let q = set(&["q"], vec![vec![1.0, 0.0]]);
        let g = set(&["b", "a"], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let m = search_topk(&q, &g, 5).unwrap();
        let hits = &m.queries[0].hits;
        assert_eq!(hits.len(), 2);
        assert_eq!((hits[0].gallery_id.as_str(), hits[0].score), ("a", 1.0));
        assert_eq!((hits[1].gallery_id.as_str(), hits[1].score), ("b", 0.0));
    }

    #[test]
    fn ties_break_by_id() {
        let q = set(&["q"], vec![vec![1.0, 0.0]]);
        let g = set(&["z", "m", "c"], vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, -1.0]]);
        let m = search_topk(&q, &g, 2).unwrap();
        let ids: Vec<_> = m.queries[0].hits.iter().map(|h| h.gallery_id.as_str()).collect();
        assert_eq!(ids, ["c", "m"]);
    }

    #[test]
    fn errors() {
        let q = set(&["q"], vec![vec![1.0, 0.0]]);
        let g = set(&["g"], vec![vec![1.0, 0.0, 0.0]]);
        assert!(matches!(search_topk(&q, &g, 1), Err(Error::Shape(_))));
        assert!(search_topk(&q, &q, 0).is_err());
        assert!(matches!(aggregate_max(&[]), Err(Error::Shape(_))));
    }

    fn list(entries: &[(&str, &[(&str, f64)])]) -> MatchList {
        MatchList {
            queries: entries
                .iter()
                .map(|(q, hits)| QueryMatches {
                    query_id: q.to_string(),
                    hits: hits.iter().map(|(g, s)| Hit { gallery_id: g.to_string(), score: *s }).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn aggregate_takes_max() {
        let a = list(&[("q", &[("x", 0.2), ("y", 0.1)])]);
        let b = list(&[("q", &[("y", 0.3), ("x", 0.7)])]);
        let m = aggregate_max(&[a.clone(), b]).unwrap();
        assert_eq!(m, list(&[("q", &[("x", 0.7), ("y", 0.3)])]));
        assert_eq!(aggregate_max(std::slice::from_ref(&a)).unwrap(), a);
        let other = list(&[("q", &[("x", 0.2), ("z", 0.1)])]);
        assert!(matches!(aggregate_max(&[a, other]), Err(Error::Shape(_))));
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(5.0 / 6.0, 9), "0.833333333");
        assert_eq!(format_sig(-0.123456789012, 9), "-0.123456789");
        assert_eq!(format_sig(1.5e-7, 9), "1.5e-07");
        assert_eq!(format_sig(0.9999999999, 9), "1");
        assert_eq!(format_sig(0.00012345, 9), "0.00012345");
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = list(&[("q1", &[("a", 0.5), ("b", 0.25)]), ("q0", &[("b", -0.125)])]);
        write_matches(&m, &p).unwrap();
        assert_eq!(read_matches(&p).unwrap(), m);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("query_id,gallery_id,score\nq1,a,0.5\n"));
    }
}
