#![allow(dead_code)]

use std::path::{Path, PathBuf};

use l2hmi::headless::{AgentEntry, AgentsFile};
use l2hmi::logfile::{read_log, SessionLog};
use l2hmi_core::agent::AgentSpec;
use l2hmi_core::experiment::{LogEvent, LogRecord};

pub fn entry(id: &str, delay: f64, miss: f64, seed: u64) -> AgentEntry {
    AgentEntry {
        id: id.to_string(),
        spec: AgentSpec {
            reaction_delay: delay,
            brake_magnitude: 1.0,
            miss_probability: miss,
            seed,
        },
        scenario_seed: Some(seed),
    }
}

pub fn agents(entries: Vec<AgentEntry>, group_seed: u64) -> AgentsFile {
    AgentsFile {
        group_seed: Some(group_seed),
        participants: entries,
    }
}

pub fn read(path: &Path) -> SessionLog {
    read_log(path).unwrap()
}

pub fn events<'a>(records: &'a [LogRecord], pred: impl Fn(&LogEvent) -> bool + 'a) -> impl Iterator<Item = &'a LogRecord> + 'a {
    records.iter().filter(move |r| pred(&r.event))
}

/// Rewrites line `index` (0 = header) of a log file through `edit`.
pub fn edit_line(src: &Path, dst: &Path, index: usize, edit: impl FnOnce(&str) -> String) {
    let text = std::fs::read_to_string(src).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[index] = edit(&lines[index]);
    std::fs::write(dst, lines.join("\n") + "\n").unwrap();
}

pub fn line_index(path: &Path, pred: impl Fn(&str) -> bool) -> usize {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .position(pred)
        .expect("matching line")
}

pub fn out_dir(tmp: &tempfile::TempDir, name: &str) -> PathBuf {
    tmp.path().join(name)
}
