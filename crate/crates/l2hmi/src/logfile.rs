//! Session logs are JSON lines: a header, one line per [`LogRecord`], and a
//! trailer sealing the preceding bytes with SHA-256.
//!
//! ```text
//! {"header":{"schema":"l2hmi-session-log","version":1,...}}
//! {"seq":0,"event":{"type":"stage_started",...}}
//! ...
//! {"trailer":{"records":N,"sha256":"..."}}
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use l2hmi_core::experiment::{LogRecord, Participant};
use l2hmi_core::Config;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::config_hash;
use crate::{Error, Result};

pub const SCHEMA: &str = "l2hmi-session-log";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Headless,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub schema: String,
    pub version: u32,
    pub mode: RunMode,
    pub participant: Participant,
    pub scenario_seed: u64,
    pub config_hash: String,
    pub config: Config,
}

impl LogHeader {
    pub fn new(mode: RunMode, participant: Participant, scenario_seed: u64, cfg: &Config) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            version: SCHEMA_VERSION,
            mode,
            participant,
            scenario_seed,
            config_hash: config_hash(cfg),
            config: cfg.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogTrailer {
    pub records: u64,
    pub sha256: String,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: LogHeader,
}

#[derive(Serialize, Deserialize)]
struct TrailerLine {
    trailer: LogTrailer,
}

/// Streams records to disk, hashing as it goes.
pub struct LogWriter<W: Write> {
    out: W,
    hasher: Sha256,
    records: u64,
}

impl LogWriter<BufWriter<File>> {
    pub fn create(path: &Path, header: &LogHeader) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Self::new(BufWriter::new(file), header).map_err(|e| Error::io(path, e))
    }
}

impl<W: Write> LogWriter<W> {
    pub fn new(out: W, header: &LogHeader) -> std::io::Result<Self> {
        let mut w = Self {
            out,
            hasher: Sha256::new(),
            records: 0,
        };
        let line = serde_json::to_string(&HeaderLine {
            header: header.clone(),
        })?;
        w.line(&line)?;
        Ok(w)
    }

    fn line(&mut self, line: &str) -> std::io::Result<()> {
        self.hasher.update(line.as_bytes());
        self.hasher.update(b"\n");
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")
    }

    pub fn record(&mut self, record: &LogRecord) -> std::io::Result<()> {
        let line = serde_json::to_string(record)?;
        self.records += 1;
        self.line(&line)
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    /// Writes the trailer and flushes.
    pub fn finish(mut self) -> std::io::Result<W> {
        let trailer = LogTrailer {
            records: self.records,
            sha256: hex::encode(self.hasher.clone().finalize()),
        };
        let line = serde_json::to_string(&TrailerLine { trailer })?;
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(self.out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Integrity {
    Sealed,
    /// No trailer: the writer never finished.
    Unsealed,
    CountMismatch { expected: u64, found: u64 },
    HashMismatch,
}

impl Integrity {
    pub fn is_sealed(&self) -> bool {
        *self == Integrity::Sealed
    }

    pub fn describe(&self) -> String {
        match self {
            Integrity::Sealed => "sealed".into(),
            Integrity::Unsealed => "log has no trailer".into(),
            Integrity::CountMismatch { expected, found } => {
                format!("trailer says {expected} records, found {found}")
            }
            Integrity::HashMismatch => "content hash does not match the trailer".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionLog {
    pub path: PathBuf,
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
    pub trailer: Option<LogTrailer>,
    pub integrity: Integrity,
}

pub fn read_log(path: &Path) -> Result<SessionLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let format = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut hasher = Sha256::new();
    let (_, first) = lines.next().ok_or_else(|| format(1, "empty log".into()))?;
    let first = first.map_err(|e| Error::io(path, e))?;
    let header = serde_json::from_str::<HeaderLine>(&first)
        .map_err(|e| format(1, format!("header: {e}")))?
        .header;
    if header.schema != SCHEMA {
        return Err(format(1, format!("unknown schema {:?}", header.schema)));
    }
    if header.version != SCHEMA_VERSION {
        return Err(format(
            1,
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", header.version),
        ));
    }
    hasher.update(first.as_bytes());
    hasher.update(b"\n");
    let mut records = Vec::new();
    let mut trailer = None;
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        if trailer.is_some() {
            return Err(format(i + 1, "content after the trailer".into()));
        }
        if line.starts_with("{\"trailer\"") {
            let t: TrailerLine =
                serde_json::from_str(&line).map_err(|e| format(i + 1, format!("trailer: {e}")))?;
            trailer = Some(t.trailer);
            continue;
        }
        let record: LogRecord =
            serde_json::from_str(&line).map_err(|e| format(i + 1, e.to_string()))?;
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
        records.push(record);
    }
    let integrity = match &trailer {
        None => Integrity::Unsealed,
        Some(t) if t.records != records.len() as u64 => Integrity::CountMismatch {
            expected: t.records,
            found: records.len() as u64,
        },
        Some(t) if t.sha256 != hex::encode(hasher.finalize()) => Integrity::HashMismatch,
        Some(_) => Integrity::Sealed,
    };
    Ok(SessionLog {
        path: path.to_path_buf(),
        header,
        records,
        trailer,
        integrity,
    })
}

/// `*.jsonl` files directly under `dir`, sorted by name.
pub fn log_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "jsonl") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
