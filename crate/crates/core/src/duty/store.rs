//! File-backed persistence: an append-only event log plus a checksummed snapshot.
//!
//! Layout of a store directory:
//!
//! * `events.ndjson`: one JSON object per line, `{"entry":{..},"seq":n,"sha256":".."}`,
//!   where `sha256` covers the canonical form of `{"entry":..,"seq":..}`.
//! * `snapshot.json`: `{"body":{"last_seq":n,"state":{"duties":[..],"thresholds":{..}}},"sha256":".."}`,
//!   where `sha256` covers the canonical form of `body`.
//!
//! Restoring loads the snapshot and replays log entries past `last_seq`.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::registry::{LogEntry, Registry, RegistryState};
use crate::canonical;
use crate::engine::EngineConfig;

pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const EVENTS_FILE: &str = "events.ndjson";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
}

/// At-rest transform applied to the snapshot and to each log line.
///
/// Sealed log lines must not contain `\n`.
pub trait AtRestCipher: Send + Sync {
    fn seal(&self, plain: Vec<u8>) -> Vec<u8>;
    fn open(&self, sealed: Vec<u8>) -> Result<Vec<u8>, String>;
}

/// Stores plaintext.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plaintext;

impl AtRestCipher for Plaintext {
    fn seal(&self, plain: Vec<u8>) -> Vec<u8> {
        plain
    }

    fn open(&self, sealed: Vec<u8>) -> Result<Vec<u8>, String> {
        Ok(sealed)
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotBody {
    last_seq: u64,
    state: RegistryState,
}

pub struct Store {
    dir: PathBuf,
    cipher: Box<dyn AtRestCipher>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("dir", &self.dir).finish_non_exhaustive()
    }
}

impl Store {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Store {
            dir: dir.into(),
            cipher: Box::new(Plaintext),
        }
    }

    pub fn with_cipher(mut self, cipher: impl AtRestCipher + 'static) -> Self {
        self.cipher = Box::new(cipher);
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn snapshot_path(&self) -> PathBuf {
        self.dir.join(SNAPSHOT_FILE)
    }

    fn events_path(&self) -> PathBuf {
        self.dir.join(EVENTS_FILE)
    }

    /// Appends unseen log entries and rewrites the snapshot.
    pub fn persist(&self, registry: &Registry) -> Result<(), StoreError> {
        fs::create_dir_all(&self.dir)?;
        let log = registry.log();
        let on_disk = self.read_log().unwrap_or_default();
        let prefix_matches = on_disk.len() <= log.len() && on_disk.iter().zip(log).all(|(a, b)| a == b);
        if prefix_matches {
            let mut f = OpenOptions::new().create(true).append(true).open(self.events_path())?;
            self.write_lines(&mut f, log, on_disk.len())?;
            f.sync_data()?;
        } else {
            let tmp = self.dir.join(format!("{EVENTS_FILE}.tmp"));
            let mut f = File::create(&tmp)?;
            self.write_lines(&mut f, log, 0)?;
            f.sync_data()?;
            fs::rename(tmp, self.events_path())?;
        }

        let body = serde_json::to_value(SnapshotBody {
            last_seq: log.len() as u64,
            state: registry.state().clone(),
        })
        .map_err(|e| StoreError::CorruptStore(e.to_string()))?;
        let sum = canonical::checksum(canonical::value_to_string(&body).as_bytes());
        let file = serde_json::json!({ "body": body, "sha256": sum });
        let bytes = self.cipher.seal(canonical::value_to_string(&file).into_bytes());
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(tmp, self.snapshot_path())?;
        Ok(())
    }

    fn write_lines(&self, out: &mut impl Write, log: &[LogEntry], skip: usize) -> Result<(), StoreError> {
        for (i, entry) in log.iter().enumerate().skip(skip) {
            let line = self.encode_line(i as u64 + 1, entry)?;
            out.write_all(&line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    fn encode_line(&self, seq: u64, entry: &LogEntry) -> Result<Vec<u8>, StoreError> {
        let signed = serde_json::json!({
            "entry": serde_json::to_value(entry).map_err(|e| StoreError::CorruptStore(e.to_string()))?,
            "seq": seq,
        });
        let sum = canonical::checksum(canonical::value_to_string(&signed).as_bytes());
        let mut obj = signed;
        obj["sha256"] = Value::String(sum);
        Ok(self.cipher.seal(canonical::value_to_string(&obj).into_bytes()))
    }

    fn read_log(&self) -> Result<Vec<LogEntry>, StoreError> {
        let path = self.events_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        let reader = BufReader::new(File::open(path)?);
        let mut out = Vec::new();
        for (i, line) in reader.split(b'\n').enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let plain = self
                .cipher
                .open(line)
                .map_err(|e| StoreError::CorruptStore(format!("event {}: {e}", i + 1)))?;
            let corrupt = |m: &str| StoreError::CorruptStore(format!("event line {}: {m}", i + 1));
            let mut v: Value = serde_json::from_slice(&plain).map_err(|e| corrupt(&e.to_string()))?;
            let sum = v
                .as_object_mut()
                .and_then(|o| o.remove("sha256"))
                .and_then(|s| s.as_str().map(str::to_owned))
                .ok_or_else(|| corrupt("missing checksum"))?;
            if canonical::checksum(canonical::value_to_string(&v).as_bytes()) != sum {
                return Err(corrupt("checksum mismatch"));
            }
            if v.get("seq").and_then(Value::as_u64) != Some(out.len() as u64 + 1) {
                return Err(corrupt("sequence gap"));
            }
            let entry = serde_json::from_value(v["entry"].take()).map_err(|e| corrupt(&e.to_string()))?;
            out.push(entry);
        }
        Ok(out)
    }

    fn read_snapshot(&self) -> Result<Option<SnapshotBody>, StoreError> {
        let path = self.snapshot_path();
        if !path.exists() {
            return Ok(None);
        }
        let raw = fs::read(path)?;
        let plain = self.cipher.open(raw).map_err(StoreError::CorruptStore)?;
        let corrupt = |m: String| StoreError::CorruptStore(format!("snapshot: {m}"));
        let mut v: Value = serde_json::from_slice(&plain).map_err(|e| corrupt(e.to_string()))?;
        let sum = v.get("sha256").and_then(Value::as_str).map(str::to_owned);
        let body = v.get_mut("body").map(Value::take);
        let (Some(sum), Some(body)) = (sum, body) else {
            return Err(corrupt("missing body or checksum".into()));
        };
        if canonical::checksum(canonical::value_to_string(&body).as_bytes()) != sum {
            return Err(corrupt("checksum mismatch".into()));
        }
        serde_json::from_value(body).map(Some).map_err(|e| corrupt(e.to_string()))
    }

    /// Rebuilds the registry. A missing or empty directory yields an empty registry.
    pub fn restore(&self, cfg: &EngineConfig) -> Result<Registry, StoreError> {
        let snapshot = self.read_snapshot()?;
        let log = self.read_log()?;
        let (state, covered) = match snapshot {
            Some(s) => (s.state, s.last_seq as usize),
            None => (RegistryState::default(), 0),
        };
        if covered > log.len() {
            return Err(StoreError::CorruptStore(format!(
                "snapshot covers {covered} events but the log holds {}",
                log.len()
            )));
        }
        let mut rest = log;
        let tail = rest.split_off(covered);
        let mut registry = Registry::from_parts(cfg, state, rest);
        for entry in tail {
            registry.replay(entry);
        }
        Ok(registry)
    }
}

/// Writes `registry` into `dir`.
pub fn persist(registry: &Registry, dir: impl Into<PathBuf>) -> Result<(), StoreError> {
    Store::new(dir).persist(registry)
}

/// Reads the registry stored in `dir` with the default engine configuration.
pub fn restore(dir: impl Into<PathBuf>) -> Result<Registry, StoreError> {
    Store::new(dir).restore(&EngineConfig::default())
}
