use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::{EngineReport, SignalValue};

pub const CACHE_ENV: &str = "ADVERTOSCOPE_CACHE";
pub const DEFAULT_TTL_DAYS: i64 = 30;

/// One line of the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub engine_id: String,
    pub domain: String,
    pub retrieved_at: DateTime<Utc>,
    pub signals: std::collections::BTreeMap<String, SignalValue>,
}

impl From<&EngineReport> for CacheRecord {
    fn from(r: &EngineReport) -> Self {
        Self {
            engine_id: r.engine_id.clone(),
            domain: r.domain.clone(),
            retrieved_at: r.retrieved_at,
            signals: r.signals.clone(),
        }
    }
}

impl From<CacheRecord> for EngineReport {
    fn from(r: CacheRecord) -> Self {
        Self {
            engine_id: r.engine_id,
            domain: r.domain,
            signals: r.signals,
            retrieved_at: r.retrieved_at,
            failure: None,
        }
    }
}

type Key = (String, String);

/// Append-only report cache keyed by (engine id, domain); the last record
/// for a key wins. Readers share a lock; appends are serialized.
#[derive(Debug)]
pub struct ReportCache {
    path: Option<PathBuf>,
    ttl: Duration,
    entries: RwLock<HashMap<Key, CacheRecord>>,
    writer: Mutex<Option<File>>,
    skipped_lines: usize,
}

impl ReportCache {
    pub fn in_memory(ttl: Duration) -> Self {
        Self {
            path: None,
            ttl,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
            skipped_lines: 0,
        }
    }

    /// The path named by `ADVERTOSCOPE_CACHE`, if set.
    pub fn env_path() -> Option<PathBuf> {
        std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
    }

    /// Loads existing records; unreadable lines are skipped with a warning.
    pub fn open(path: &Path, ttl: Duration) -> std::io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut entries = HashMap::new();
        let mut skipped = 0;
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) => {
                        entries.insert((rec.engine_id.clone(), rec.domain.clone()), rec);
                    }
                    Err(e) => {
                        log::warn!("{}:{}: skipping cache line: {e}", path.display(), i + 1);
                        skipped += 1;
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            ttl,
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(file)),
            skipped_lines: skipped,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    /// A record no older than the TTL at `now`.
    pub fn get(&self, engine_id: &str, domain: &str, now: DateTime<Utc>) -> Option<EngineReport> {
        let entries = self.entries.read().expect("cache lock");
        let rec = entries.get(&(engine_id.to_string(), domain.to_string()))?;
        (now - rec.retrieved_at <= self.ttl).then(|| rec.clone().into())
    }

    pub fn put(&self, report: &EngineReport) -> std::io::Result<()> {
        let rec = CacheRecord::from(report);
        let mut writer = self.writer.lock().expect("cache writer lock");
        if let Some(file) = writer.as_mut() {
            let mut line = serde_json::to_string(&rec).expect("record serializes");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert((rec.engine_id.clone(), rec.domain.clone()), rec);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Live records sorted by (engine id, domain).
    pub fn records(&self) -> Vec<CacheRecord> {
        let mut v: Vec<CacheRecord> = self.entries.read().expect("cache lock").values().cloned().collect();
        v.sort_by(|a, b| (&a.engine_id, &a.domain).cmp(&(&b.engine_id, &b.domain)));
        v
    }

    /// Rewrites the file with only the latest, unexpired record per key.
    pub fn compact(&self, now: DateTime<Utc>) -> std::io::Result<usize> {
        let mut writer = self.writer.lock().expect("cache writer lock");
        let mut entries = self.entries.write().expect("cache lock");
        entries.retain(|_, r| now - r.retrieved_at <= self.ttl);
        if let Some(path) = &self.path {
            let mut keep: Vec<&CacheRecord> = entries.values().collect();
            keep.sort_by(|a, b| (&a.engine_id, &a.domain).cmp(&(&b.engine_id, &b.domain)));
            let tmp = path.with_extension("tmp");
            let mut f = File::create(&tmp)?;
            for r in keep {
                writeln!(f, "{}", serde_json::to_string(r).expect("record serializes"))?;
            }
            f.sync_all()?;
            std::fs::rename(&tmp, path)?;
            *writer = Some(OpenOptions::new().append(true).open(path)?);
        }
        Ok(entries.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn report(engine: &str, score: f64, at: DateTime<Utc>) -> EngineReport {
        EngineReport {
            engine_id: engine.into(),
            domain: "example.com".into(),
            signals: BTreeMap::from([(format!("{engine}.score"), SignalValue::Number(score))]),
            retrieved_at: at,
            failure: None,
        }
    }

    #[test]
    fn last_record_wins_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c/reports.jsonl");
        let t0 = DateTime::UNIX_EPOCH;
        {
            let c = ReportCache::open(&path, Duration::days(30)).unwrap();
            c.put(&report("a", 1.0, t0)).unwrap();
            c.put(&report("a", 2.0, t0)).unwrap();
            c.put(&report("b", 3.0, t0)).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        let c = ReportCache::open(&path, Duration::days(30)).unwrap();
        assert_eq!(c.len(), 2);
        let got = c.get("a", "example.com", t0).unwrap();
        assert_eq!(got.signals["a.score"], SignalValue::Number(2.0));
    }

    #[test]
    fn ttl_expiry_and_compaction() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let t0 = DateTime::UNIX_EPOCH;
        let c = ReportCache::open(&path, Duration::days(30)).unwrap();
        c.put(&report("a", 1.0, t0)).unwrap();
        c.put(&report("b", 1.0, t0 + Duration::days(20))).unwrap();
        assert!(c.get("a", "example.com", t0 + Duration::days(30)).is_some());
        assert!(c.get("a", "example.com", t0 + Duration::days(31)).is_none());
        assert_eq!(c.compact(t0 + Duration::days(31)).unwrap(), 1);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
        c.put(&report("c", 1.0, t0)).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    }

    #[test]
    fn corrupt_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(&path, "not json\n{\"engine_id\":\"a\",\"domain\":\"d\",\"retrieved_at\":\"1970-01-01T00:00:00Z\",\"signals\":{}}\n").unwrap();
        let c = ReportCache::open(&path, Duration::days(1)).unwrap();
        assert_eq!(c.skipped_lines(), 1);
        assert_eq!(c.len(), 1);
    }
}
