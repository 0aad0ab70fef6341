//! Keyword retrieval over small text corpora (agenda entries, paper paragraphs).
//!
//! Scoring is term frequency normalized by document length, summed over the
//! distinct query terms. The top three documents are returned; equal scores
//! are broken by ascending document id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::ToolError;

pub const TOP_K: usize = 3;
pub const DOC_SEPARATOR: &str = "\n---\n";

fn terms(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

/// Numeric ids compare as numbers, everything else byte-wise.
fn cmp_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub name: String,
    documents: Vec<(String, String)>,
    doc_len: Vec<usize>,
    index: HashMap<String, Vec<(usize, usize)>>,
}

#[derive(serde::Deserialize)]
struct JsonDoc {
    id: serde_json::Value,
    text: String,
}

impl Corpus {
    pub fn new(name: impl Into<String>, documents: Vec<(String, String)>) -> Self {
        let mut c = Corpus { name: name.into(), documents, ..Default::default() };
        c.rebuild_index();
        c
    }

    /// Loads a directory of text files (id = file stem) or a line-delimited
    /// JSON file of `{id, text}` objects.
    pub fn load(name: &str, path: &Path) -> Result<Corpus, ToolError> {
        let io = |e: std::io::Error| ToolError::Io(format!("{}: {e}", path.display()));
        let mut docs = Vec::new();
        if path.is_dir() {
            let mut entries: Vec<_> = std::fs::read_dir(path)
                .map_err(io)?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            for p in entries {
                let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                docs.push((id, std::fs::read_to_string(&p).map_err(io)?));
            }
        } else {
            let text = std::fs::read_to_string(path).map_err(io)?;
            for (n, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let doc: JsonDoc = serde_json::from_str(line).map_err(|e| {
                    ToolError::Io(format!("{} line {}: {e}", path.display(), n + 1))
                })?;
                let id = match doc.id {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                docs.push((id, doc.text));
            }
        }
        Ok(Corpus::new(name, docs))
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn rebuild_index(&mut self) {
        self.index.clear();
        self.doc_len.clear();
        for (i, (_, text)) in self.documents.iter().enumerate() {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            let mut len = 0;
            for t in terms(text) {
                *counts.entry(t).or_default() += 1;
                len += 1;
            }
            self.doc_len.push(len);
            for (t, n) in counts {
                self.index.entry(t).or_default().push((i, n));
            }
        }
    }

    /// Scores for every document with at least one hit, best first.
    pub fn rank(&self, keyword: &str) -> Vec<(&str, f64)> {
        let mut query: Vec<String> = terms(keyword).collect();
        query.sort();
        query.dedup();
        let mut scores: HashMap<usize, f64> = HashMap::new();
        for t in &query {
            for &(doc, tf) in self.index.get(t).map(Vec::as_slice).unwrap_or_default() {
                *scores.entry(doc).or_default() += tf as f64 / self.doc_len[doc].max(1) as f64;
            }
        }
        let mut ranked: Vec<(&str, f64)> =
            scores.into_iter().map(|(d, s)| (self.documents[d].0.as_str(), s)).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| cmp_ids(a.0, b.0)));
        ranked
    }

    pub fn document(&self, id: &str) -> Option<&str> {
        self.documents.iter().find(|(d, _)| d == id).map(|(_, t)| t.as_str())
    }

    pub fn retrieve(&self, keyword: &str) -> Result<String, ToolError> {
        if self.is_empty() {
            return Err(ToolError::EmptyCorpus(self.name.clone()));
        }
        let hits: Vec<&str> = self
            .rank(keyword)
            .into_iter()
            .take(TOP_K)
            .filter_map(|(id, _)| self.document(id))
            .collect();
        if hits.is_empty() {
            return Ok("No results found".to_string());
        }
        Ok(hits.join(DOC_SEPARATOR))
    }
}
