//! Append-only JSONL factor cache.
//!
//! One object per line, keyed by the decimal value of `n`. Later lines never
//! overwrite a more complete earlier line: a complete factorisation beats a
//! partial one, and between partial ones the smaller cofactor wins.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use abundancy_core::factor::Factorization;
use abundancy_core::{FactorSource, FactorStatus};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cache {path} line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub n: String,
    pub status: String,
    pub factors: Vec<(String, u32)>,
    pub cofactor: String,
    pub source: String,
}

impl CacheRecord {
    pub fn from_factorization(fz: &Factorization) -> Self {
        CacheRecord {
            n: fz.n.to_string(),
            status: match fz.status {
                FactorStatus::Complete => "complete",
                FactorStatus::Partial => "partial",
            }
            .into(),
            factors: fz.factors.iter().map(|(p, e)| (p.to_string(), *e)).collect(),
            cofactor: fz.cofactor.to_string(),
            source: fz.source.as_str().into(),
        }
    }

    /// Parses and re-checks a record: the product must equal `n`, listed
    /// factors must be prime and the status must match the cofactor.
    pub fn to_factorization(&self) -> Result<Factorization, String> {
        let int = |s: &str| s.parse::<BigUint>().map_err(|_| format!("bad integer {s:?}"));
        let n = int(&self.n)?;
        let mut factors = Vec::with_capacity(self.factors.len());
        for (p, e) in &self.factors {
            factors.push((int(p)?, *e));
        }
        let source = FactorSource::parse(&self.source).ok_or_else(|| format!("unknown source {:?}", self.source))?;
        let fz = Factorization::from_parts(n, factors, int(&self.cofactor)?, source);
        let expected = match self.status.as_str() {
            "complete" => FactorStatus::Complete,
            "partial" => FactorStatus::Partial,
            other => return Err(format!("unknown status {other:?}")),
        };
        if fz.status != expected {
            return Err("status does not match cofactor".into());
        }
        fz.check().map_err(|e| e.to_string())?;
        Ok(fz)
    }
}

/// Whether `new` carries strictly more information than `old`.
pub fn more_complete(new: &Factorization, old: &Factorization) -> bool {
    match (new.is_complete(), old.is_complete()) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => false,
        (false, false) => new.cofactor < old.cofactor,
    }
}

pub struct FactorCache {
    path: Option<PathBuf>,
    entries: Mutex<HashMap<BigUint, Factorization>>,
    writer: Mutex<Option<File>>,
}

impl FactorCache {
    pub fn in_memory() -> Self {
        FactorCache { path: None, entries: Mutex::default(), writer: Mutex::new(None) }
    }

    /// Loads `path` (created if missing) and appends new results to it.
    pub fn open(path: &Path) -> Result<Self, CacheError> {
        let io = |source| CacheError::Io { path: path.to_path_buf(), source };
        let mut entries: HashMap<BigUint, Factorization> = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let corrupt = |message: String| CacheError::Corrupt { path: path.to_path_buf(), line: i + 1, message };
                let record: CacheRecord = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
                let fz = record.to_factorization().map_err(corrupt)?;
                match entries.get(&fz.n) {
                    Some(old) if !more_complete(&fz, old) => {}
                    _ => {
                        entries.insert(fz.n.clone(), fz);
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok(FactorCache {
            path: Some(path.to_path_buf()),
            entries: Mutex::new(entries),
            writer: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, n: &BigUint) -> Option<Factorization> {
        self.entries.lock().unwrap().get(n).cloned()
    }

    /// Stores `fz` unless an entry at least as complete exists. Returns
    /// whether it was stored.
    pub fn insert(&self, fz: &Factorization) -> Result<bool, CacheError> {
        {
            let mut entries = self.entries.lock().unwrap();
            if let Some(old) = entries.get(&fz.n) {
                if !more_complete(fz, old) {
                    return Ok(false);
                }
            }
            entries.insert(fz.n.clone(), fz.clone());
        }
        let mut writer = self.writer.lock().unwrap();
        if let Some(file) = writer.as_mut() {
            let mut line = serde_json::to_string(&CacheRecord::from_factorization(fz)).expect("serialisable");
            line.push('\n');
            let path = self.path.clone().unwrap_or_default();
            file.write_all(line.as_bytes()).map_err(|source| CacheError::Io { path, source })?;
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fz(n: u64, factors: &[(u64, u32)], cofactor: u64) -> Factorization {
        Factorization::from_parts(
            BigUint::from(n),
            factors.iter().map(|&(p, e)| (BigUint::from(p), e)).collect(),
            BigUint::from(cofactor),
            FactorSource::Trial,
        )
    }

    #[test]
    fn record_round_trip() {
        let f = fz(403, &[(13, 1), (31, 1)], 1);
        let rec = CacheRecord::from_factorization(&f);
        assert_eq!(
            serde_json::to_string(&rec).unwrap(),
            r#"{"n":"403","status":"complete","factors":[["13",1],["31",1]],"cofactor":"1","source":"trial"}"#
        );
        assert_eq!(rec.to_factorization().unwrap(), f);
    }

    #[test]
    fn bad_records_are_rejected() {
        let mut rec = CacheRecord::from_factorization(&fz(403, &[(13, 1), (31, 1)], 1));
        rec.n = "404".into();
        assert!(rec.to_factorization().is_err());
        let mut rec = CacheRecord::from_factorization(&fz(899, &[], 899));
        rec.status = "complete".into();
        assert!(rec.to_factorization().is_err());
    }

    #[test]
    fn more_complete_wins() {
        let cache = FactorCache::in_memory();
        let partial = fz(899 * 7, &[(7, 1)], 899);
        let complete = fz(899 * 7, &[(7, 1), (29, 1), (31, 1)], 1);
        assert!(cache.insert(&partial).unwrap());
        assert!(cache.insert(&complete).unwrap());
        assert!(!cache.insert(&partial).unwrap());
        assert_eq!(cache.get(&BigUint::from(899u32 * 7)).unwrap(), complete);
    }
}
