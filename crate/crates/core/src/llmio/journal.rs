//! Append-only JSON-lines record of direct-query results, so long runs can
//! resume where they stopped.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::client::{QueryOutcome, QueryResult};
use crate::instances::ProblemKind;
use crate::render::Representation;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryKey {
    pub problem: ProblemKind,
    pub representation: Representation,
    pub instance: String,
    pub feature: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    #[serde(flatten)]
    key: QueryKey,
    #[serde(flatten)]
    result: QueryResult,
}

pub struct QueryJournal {
    path: PathBuf,
    done: HashMap<QueryKey, QueryResult>,
    file: Mutex<File>,
}

impl QueryJournal {
    /// Opens (or creates) the journal and loads every completed entry.
    /// Transport failures are not treated as completed, so they are retried.
    /// A torn final line from an interrupted run is ignored.
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut done = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                let Ok(entry) = serde_json::from_str::<Entry>(&line) else {
                    log::warn!("skipping unreadable journal line in {}", path.display());
                    continue;
                };
                if !matches!(entry.result.outcome, QueryOutcome::TransportFailure(_)) {
                    done.insert(entry.key, entry.result);
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(QueryJournal {
            path: path.to_owned(),
            done,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &QueryKey) -> Option<&QueryResult> {
        self.done.get(key)
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }

    pub fn append(&self, key: &QueryKey, result: &QueryResult) -> io::Result<()> {
        let mut line = serde_json::to_string(&Entry {
            key: key.clone(),
            result: result.clone(),
        })?;
        line.push('\n');
        let mut f = self.file.lock().expect("journal lock poisoned");
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmio::prompt::FeatureValue;

    fn key(f: &str) -> QueryKey {
        QueryKey {
            problem: ProblemKind::Gcp,
            representation: Representation::Standard,
            instance: "g".into(),
            feature: f.into(),
        }
    }

    fn result(outcome: QueryOutcome) -> QueryResult {
        QueryResult {
            raw: Some("{}".into()),
            value: Some(FeatureValue::Integer(3)),
            outcome,
            latency_ms: 1,
            attempts: 1,
        }
    }

    #[test]
    fn reopen_restores_completed_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.jsonl");
        {
            let j = QueryJournal::open(&path).unwrap();
            j.append(&key("a"), &result(QueryOutcome::Value)).unwrap();
            j.append(
                &key("b"),
                &result(QueryOutcome::TransportFailure("down".into())),
            )
            .unwrap();
        }
        std::fs::OpenOptions::new()
            .append(true)
            .open(&path)
            .unwrap()
            .write_all(b"{\"proble")
            .unwrap();
        let j = QueryJournal::open(&path).unwrap();
        assert_eq!(j.len(), 1);
        assert_eq!(
            j.get(&key("a")).unwrap().value,
            Some(FeatureValue::Integer(3))
        );
        assert!(j.get(&key("b")).is_none());
    }
}
