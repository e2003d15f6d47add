use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DesignVector;
use crate::simbackend::{Fidelity, FrequencyGrid, ResponseCurve};

use super::Verdict;

/// A simulated candidate and its verdicts, keyed by classifier spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: u64,
    /// Seed that reproduces the candidate draw.
    pub seed: u64,
    /// Unix time of creation (seconds).
    pub timestamp: u64,
    /// Spec key the candidate was drawn for.
    pub generated_for: String,
    #[serde(with = "design_array")]
    pub design: DesignVector,
    pub grid: FrequencyGrid,
    pub fidelity: Fidelity,
    /// Full-sweep response of `design` at its own scale.
    pub curve: Vec<f64>,
    #[serde(default)]
    pub verdicts: BTreeMap<String, Verdict>,
}

mod design_array {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::geometry::DesignVector;

    pub fn serialize<S: Serializer>(x: &DesignVector, s: S) -> Result<S::Ok, S::Error> {
        x.to_vec().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DesignVector, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        DesignVector::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

impl CandidateRecord {
    pub fn new(
        id: u64,
        seed: u64,
        generated_for: &str,
        design: &DesignVector,
        curve: &ResponseCurve,
        verdicts: BTreeMap<String, Verdict>,
    ) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            id,
            seed,
            timestamp,
            generated_for: generated_for.to_string(),
            design: design.clone(),
            grid: curve.grid,
            fidelity: Fidelity::Coarse,
            curve: curve.values.clone(),
            verdicts,
        }
    }

    pub fn curve(&self) -> Result<ResponseCurve> {
        ResponseCurve::new(self.grid, self.curve.clone())
    }
}

/// Append-only JSON-lines store of candidates. When an id appears on several
/// lines the last one wins. Writes go through `&mut self`, so a single owner
/// serializes them; reads can be shared freely.
#[derive(Debug, Default)]
pub struct DesignDatabase {
    path: Option<PathBuf>,
    records: Vec<CandidateRecord>,
    index: HashMap<u64, usize>,
}

impl DesignDatabase {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// In-memory copy of the current contents, detached from any file.
    pub fn detached_copy(&self) -> Self {
        Self {
            path: None,
            records: self.records.clone(),
            index: self.index.clone(),
        }
    }

    /// Loads `path`, or starts an empty database there if it does not exist.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut db = Self {
            path: Some(path.clone()),
            ..Self::default()
        };
        if !path.exists() {
            return Ok(db);
        }
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: CandidateRecord = serde_json::from_str(&line).map_err(|e| {
                Error::Parse(format!("{} line {}: {e}", path.display(), n + 1))
            })?;
            db.upsert(record);
        }
        Ok(db)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn upsert(&mut self, record: CandidateRecord) {
        match self.index.get(&record.id) {
            Some(&i) => self.records[i] = record,
            None => {
                self.index.insert(record.id, self.records.len());
                self.records.push(record);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[CandidateRecord] {
        &self.records
    }

    pub fn next_id(&self) -> u64 {
        self.records.iter().map(|r| r.id + 1).max().unwrap_or(0)
    }

    pub fn get(&self, id: u64) -> Result<&CandidateRecord> {
        self.index
            .get(&id)
            .map(|&i| &self.records[i])
            .ok_or(Error::UnknownRecord(id))
    }

    /// Stores `record` (replacing any record with the same id) and returns its id.
    pub fn append(&mut self, record: CandidateRecord) -> Result<u64> {
        if let Some(path) = &self.path {
            let mut line = serde_json::to_string(&record)?;
            line.push('\n');
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            file.write_all(line.as_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        let id = record.id;
        self.upsert(record);
        Ok(id)
    }

    /// Records a verdict for `id` under `key`.
    pub fn set_verdict(&mut self, id: u64, key: &str, verdict: Verdict) -> Result<()> {
        let mut record = self.get(id)?.clone();
        record.verdicts.insert(key.to_string(), verdict);
        self.append(record)?;
        Ok(())
    }

    /// Drops records for which `keep` is false and rewrites the file with one
    /// line per surviving record. Returns the number removed.
    pub fn prune(&mut self, keep: impl Fn(&CandidateRecord) -> bool) -> Result<usize> {
        let before = self.records.len();
        let kept: Vec<CandidateRecord> = self.records.drain(..).filter(|r| keep(r)).collect();
        self.index.clear();
        for r in kept {
            self.upsert(r);
        }
        if let Some(path) = &self.path {
            let tmp = path.with_extension("jsonl.tmp");
            let mut file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            for r in &self.records {
                let mut line = serde_json::to_string(r)?;
                line.push('\n');
                file.write_all(line.as_bytes())
                    .map_err(|e| Error::io(&tmp, e))?;
            }
            file.sync_all().map_err(|e| Error::io(&tmp, e))?;
            std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
        }
        Ok(before - self.records.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64) -> CandidateRecord {
        let grid = FrequencyGrid::new(1.0, 10.0, 10).unwrap();
        let curve = ResponseCurve::new(grid, vec![-1.5; 10]).unwrap();
        let x = DesignVector::new(30.0, 0.1, 0.2, vec![0.5; 3], vec![0.3; 3]).unwrap();
        CandidateRecord::new(id, 7 + id, "5-6--5", &x, &curve, BTreeMap::new())
    }

    #[test]
    fn persists_and_last_line_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        let mut db = DesignDatabase::open(&path).unwrap();
        assert!(db.is_empty());
        db.append(record(0)).unwrap();
        db.append(record(1)).unwrap();
        let v = Verdict {
            accepted: true,
            c_star: 41.5,
            u_q: -0.25,
        };
        db.set_verdict(0, "6-7--5", v).unwrap();

        let back = DesignDatabase::open(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.next_id(), 2);
        assert_eq!(back.get(0).unwrap().verdicts["6-7--5"], v);
        assert_eq!(back.get(1).unwrap(), db.get(1).unwrap());
        assert!(matches!(back.get(9), Err(Error::UnknownRecord(9))));
    }

    #[test]
    fn prune_rewrites_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        let mut db = DesignDatabase::open(&path).unwrap();
        for id in 0..4 {
            db.append(record(id)).unwrap();
        }
        db.set_verdict(2, "k", Verdict { accepted: false, c_star: 1.0, u_q: 1.0 })
            .unwrap();
        assert_eq!(db.prune(|r| r.id % 2 == 0).unwrap(), 2);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back = DesignDatabase::open(&path).unwrap();
        assert_eq!(back.records().iter().map(|r| r.id).collect::<Vec<_>>(), [0, 2]);
        assert!(back.get(2).unwrap().verdicts.contains_key("k"));
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        std::fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(DesignDatabase::open(&path), Err(Error::Parse(_))));
    }
}
