use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::records::read_jsonl;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::patterns::PartnerSource;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub id: String,
    pub path: PathBuf,
}

/// Ordered list of source images.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceManifest {
    pub entries: Vec<SourceEntry>,
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

impl SourceManifest {
    pub fn new(entries: Vec<SourceEntry>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if e.id.is_empty() || e.id.contains(['\n', '\r', ',', '/', '\\']) {
                return Err(Error::Config(format!("invalid source id {:?}", e.id)));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Config(format!("duplicate source id `{}`", e.id)));
            }
        }
        Ok(Self { entries })
    }

    /// PNG/JPEG files in `dir`, sorted by file name; ids are file stems.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::Config(format!("source directory {} does not exist", dir.display())));
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        paths.sort();
        let entries = paths
            .into_iter()
            .map(|path| SourceEntry {
                id: path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned(),
                path,
            })
            .collect();
        Self::new(entries)
    }

    /// JSON-lines manifest of `{"id", "path"}`; relative paths resolve against the manifest's directory.
    pub fn from_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        let mut entries: Vec<SourceEntry> = read_jsonl(path)?;
        for e in &mut entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn load(&self, index: usize) -> Result<Image> {
        Image::load(&self.entries[index].path)
    }
}

/// Partner images drawn from a forge's own sources.
pub struct SourcePartners<'a> {
    pub sources: &'a [SourceEntry],
}

impl PartnerSource for SourcePartners<'_> {
    fn partner(&self, index: u64) -> Result<Image> {
        if self.sources.is_empty() {
            return Err(Error::Config("no sources available for partner images".into()));
        }
        let entry = &self.sources[(index % self.sources.len() as u64) as usize];
        Image::load(&entry.path)
    }
}
