//! Dataset ingestion and simulated annotation.
//!
//! Datasets are newline-delimited JSON, one record per line with the keys
//! `id`, `source` and `summary`. The gold summary is loaded with the document
//! but strategies only ever see it through [`Corpus::reveal_reference`], which
//! stands in for a human annotator.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stable, opaque document identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(String);

impl DocId {
    pub fn new(id: impl Into<String>) -> Self {
        DocId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DocId {
    fn from(s: &str) -> Self {
        DocId(s.to_string())
    }
}

impl From<String> for DocId {
    fn from(s: String) -> Self {
        DocId(s)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: document {id:?} has an empty source")]
    EmptySource { line: usize, id: String },
    #[error("document {0:?} is in both the train pool and the test set")]
    SplitOverlap(String),
    #[error("unknown train document {0:?}")]
    UnknownId(String),
}

/// One corpus item: a source text and its (hidden) gold summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocId,
    pub source: String,
    #[serde(rename = "summary")]
    pub reference: String,
}

impl Document {
    pub fn new(
        id: impl Into<DocId>,
        source: impl Into<String>,
        reference: impl Into<String>,
    ) -> Self {
        Document {
            id: id.into(),
            source: source.into(),
            reference: reference.into(),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    source: Option<String>,
    summary: Option<String>,
}

/// Parse a dataset from its textual contents. Blank lines are skipped;
/// reported line numbers are 1-based.
pub fn parse_dataset(contents: &str) -> Result<Vec<Document>, CorpusError> {
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (idx, raw_line) in contents.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = serde_json::from_str(raw_line).map_err(|e| CorpusError::Parse {
            line,
            message: e.to_string(),
        })?;
        let missing = |field: &str| CorpusError::Parse {
            line,
            message: format!("missing field `{field}`"),
        };
        let id = rec.id.ok_or_else(|| missing("id"))?;
        let source = rec.source.ok_or_else(|| missing("source"))?;
        let summary = rec.summary.ok_or_else(|| missing("summary"))?;
        if source.trim().is_empty() {
            return Err(CorpusError::EmptySource { line, id });
        }
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        docs.push(Document::new(id, source, summary));
    }
    Ok(docs)
}

/// Load a dataset file (either split), preserving file order.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&contents)
}

/// Write documents in the dataset line format.
pub fn write_dataset(path: impl AsRef<Path>, docs: &[Document]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serde_json::to_string(doc).expect("documents always serialize"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Train pool plus held-out test set. Immutable once built.
#[derive(Debug, Clone)]
pub struct Corpus {
    train_pool: Vec<Document>,
    test_set: Vec<Document>,
    train_index: std::collections::HashMap<DocId, usize>,
}

impl Corpus {
    pub fn new(train_pool: Vec<Document>, test_set: Vec<Document>) -> Result<Self, CorpusError> {
        let mut train_index = std::collections::HashMap::with_capacity(train_pool.len());
        for (i, doc) in train_pool.iter().enumerate() {
            if train_index.insert(doc.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(doc.id.to_string()));
            }
        }
        let mut test_ids = HashSet::with_capacity(test_set.len());
        for doc in &test_set {
            if train_index.contains_key(&doc.id) {
                return Err(CorpusError::SplitOverlap(doc.id.to_string()));
            }
            if !test_ids.insert(&doc.id) {
                return Err(CorpusError::DuplicateId(doc.id.to_string()));
            }
        }
        Ok(Corpus {
            train_pool,
            test_set,
            train_index,
        })
    }

    pub fn load(train: impl AsRef<Path>, test: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Corpus::new(load_dataset(train)?, load_dataset(test)?)
    }

    pub fn train_pool(&self) -> &[Document] {
        &self.train_pool
    }

    pub fn test_set(&self) -> &[Document] {
        &self.test_set
    }

    pub fn train_ids(&self) -> Vec<DocId> {
        self.train_pool.iter().map(|d| d.id.clone()).collect()
    }

    pub fn train_doc(&self, id: &DocId) -> Option<&Document> {
        self.train_index.get(id).map(|&i| &self.train_pool[i])
    }

    /// Simulated annotation: hand back the gold pair for a train document.
    pub fn reveal_reference(&self, id: &DocId) -> Result<(&str, &str), CorpusError> {
        let doc = self
            .train_doc(id)
            .ok_or_else(|| CorpusError::UnknownId(id.to_string()))?;
        Ok((&doc.source, &doc.reference))
    }
}
