use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patterns::PatternCombo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordSplit {
    Train,
    Query,
    Distractor,
    Gallery,
    PoolOriginal,
    PoolReplica,
}

impl RecordSplit {
    pub fn dir(self) -> &'static str {
        match self {
            RecordSplit::Train => "train",
            RecordSplit::Query | RecordSplit::Distractor => "queries",
            RecordSplit::Gallery => "gallery",
            RecordSplit::PoolOriginal | RecordSplit::PoolReplica => "pool",
        }
    }
}

/// Where one forged image came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub id: String,
    pub source_id: String,
    pub split: RecordSplit,
    /// Empty for untransformed images.
    pub combo: PatternCombo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    /// Image file, relative to the run root.
    pub path: String,
}

impl ProvenanceRecord {
    pub fn combo_key(&self) -> String {
        self.combo.key()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPoolEntry {
    pub pair_id: String,
    pub combo_key: String,
    pub original_id: String,
    pub replica_id: String,
    pub original_path: String,
    pub replica_path: String,
}

/// A record that could not be produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub id: String,
    pub source_id: String,
    pub error: String,
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, row).map_err(|source| Error::Json { path: path.into(), source })?;
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line).map_err(|source| Error::Json { path: path.into(), source })?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::sample_instance;

    #[test]
    fn record_json_shape() {
        let rec = ProvenanceRecord {
            id: "Q000001".into(),
            source_id: "img7".into(),
            split: RecordSplit::Query,
            combo: PatternCombo::new(vec![sample_instance("Swirl", 4).unwrap()]),
            pair_id: None,
            path: "queries/Q000001.png".into(),
        };
        let v = serde_json::to_value(&rec).unwrap();
        assert_eq!(v["split"], "query");
        assert_eq!(v["combo"][0]["pattern_id"], "Swirl");
        assert!(v.get("pair_id").is_none());

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        write_jsonl(&p, &[rec.clone(), rec.clone()]).unwrap();
        assert_eq!(read_jsonl::<ProvenanceRecord>(&p).unwrap(), vec![rec.clone(), rec]);
    }
}
