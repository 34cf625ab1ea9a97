//! Re-simulates a session log from its recorded inputs and checks every
//! drive record, checkpoints included, against a fresh run.

use std::collections::BTreeMap;

use l2hmi_core::automation::{CommandSource, ControlCommand, DisengageCause};
use l2hmi_core::drive::Drive;
use l2hmi_core::experiment::{LogEvent, LogRecord, Stage};
use l2hmi_core::Config;

use crate::config::config_hash;
use crate::logfile::SessionLog;
use crate::session::DriveRecorder;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub drives: usize,
    pub ticks: u64,
    pub checkpoints: usize,
    /// The log as regenerated by the replay, without wall-clock data.
    pub records: Vec<LogRecord>,
}

/// Replays `log`. With `config`, its hash must match the one the log was
/// recorded with.
pub fn replay(log: &SessionLog, config: Option<&Config>) -> Result<ReplayReport> {
    let header = &log.header;
    if config_hash(&header.config) != header.config_hash {
        return Err(Error::Tampered("embedded config does not match its hash".into()));
    }
    if let Some(cfg) = config {
        let hash = config_hash(cfg);
        if hash != header.config_hash {
            return Err(Error::Config(format!(
                "config hash {hash} does not match the log's {}",
                header.config_hash
            )));
        }
    }
    let cfg = &header.config;
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    for (i, r) in log.records.iter().enumerate() {
        if r.seq != i as u64 {
            return Err(Error::Tampered(format!("record {i} has sequence number {}", r.seq)));
        }
    }

    let records = &log.records;
    let mut report = ReplayReport {
        drives: 0,
        ticks: 0,
        checkpoints: 0,
        records: Vec::with_capacity(records.len()),
    };
    let mut i = 0;
    while i < records.len() {
        if !matches!(records[i].event, LogEvent::DriveStarted { .. }) {
            report.records.push(strip(&records[i]));
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < records.len() {
            match records[j].event {
                LogEvent::DriveEnded { .. } | LogEvent::Aborted { .. } => {
                    j += 1;
                    break;
                }
                LogEvent::DriveStarted { .. } => break,
                _ => j += 1,
            }
        }
        replay_drive(cfg, &records[i..j], &mut report)?;
        i = j;
    }

    if !log.integrity.is_sealed() {
        return Err(Error::Tampered(log.integrity.describe()));
    }
    Ok(report)
}

fn strip(r: &LogRecord) -> LogRecord {
    let event = match &r.event {
        LogEvent::Input { tick, command, .. } => LogEvent::Input {
            tick: *tick,
            command: *command,
            received_ms: None,
        },
        other => other.clone(),
    };
    LogRecord {
        seq: r.seq,
        sim_time: r.sim_time,
        wall_ms: None,
        event,
    }
}

fn describe(event: &LogEvent) -> String {
    let mut s = serde_json::to_string(event).unwrap_or_default();
    if s.len() > 240 {
        s.truncate(240);
        s.push_str("...");
    }
    s
}

struct Cursor<'a> {
    expected: &'a [LogRecord],
    pos: usize,
    stage: Stage,
}

impl Cursor<'_> {
    fn done(&self) -> bool {
        self.pos >= self.expected.len()
    }

    fn check(&mut self, tick: u64, sim_time: Option<f64>, event: LogEvent, out: &mut ReplayReport) -> Result<()> {
        let diverged = |detail: String| Error::Divergence {
            tick,
            stage: self.stage.to_string(),
            detail,
        };
        let Some(logged) = self.expected.get(self.pos) else {
            return Err(diverged(format!("replay produced {} after the log ended", describe(&event))));
        };
        let logged = strip(logged);
        if logged.event != event {
            return Err(diverged(format!(
                "logged {} but replay produced {}",
                describe(&logged.event),
                describe(&event)
            )));
        }
        if logged.sim_time != sim_time {
            return Err(diverged(format!(
                "sim_time {:?} logged, {:?} replayed",
                logged.sim_time, sim_time
            )));
        }
        if matches!(event, LogEvent::Checkpoint { .. }) {
            out.checkpoints += 1;
        }
        out.records.push(LogRecord {
            seq: logged.seq,
            sim_time,
            wall_ms: None,
            event,
        });
        self.pos += 1;
        Ok(())
    }
}

fn replay_drive(cfg: &Config, slice: &[LogRecord], out: &mut ReplayReport) -> Result<()> {
    let LogEvent::DriveStarted {
        stage,
        variant,
        seed,
        hmi,
    } = slice[0].event
    else {
        unreachable!("slices start at DriveStarted")
    };
    let mut drive = Drive::for_stage(cfg, stage, seed, hmi)?;
    if drive.runtime().script().variant != variant {
        return Err(Error::Divergence {
            tick: 0,
            stage: stage.to_string(),
            detail: "logged variant does not match the stage".into(),
        });
    }
    out.drives += 1;
    out.records.push(strip(&slice[0]));

    let aborted = matches!(slice.last().map(|r| &r.event), Some(LogEvent::Aborted { .. }));
    let body = &slice[1..slice.len() - usize::from(aborted)];
    let mut inputs = BTreeMap::new();
    let mut toggles = Vec::new();
    for r in body {
        match &r.event {
            LogEvent::Input { tick, command, .. } => {
                inputs.insert(*tick, *command);
            }
            LogEvent::Disengaged { tick, record } if record.cause == DisengageCause::ManualToggle => {
                toggles.push(*tick);
            }
            _ => {}
        }
    }

    let mut cursor = Cursor {
        expected: body,
        pos: 0,
        stage,
    };
    let mut recorder = DriveRecorder::new(cfg);
    let mut command = ControlCommand::idle(CommandSource::Driver);
    while drive.ended().is_none() && !cursor.done() {
        let tick = drive.world().tick;
        if toggles.contains(&tick) {
            if let Some(record) = drive.manual_disengage() {
                let event = LogEvent::Disengaged { tick, record };
                cursor.check(tick, Some(recorder.time_of(tick)), event, out)?;
            }
        }
        if let Some(c) = inputs.get(&tick) {
            command = *c;
        }
        let report = drive.tick(|_| command).map_err(|e| Error::Divergence {
            tick,
            stage: stage.to_string(),
            detail: e.to_string(),
        })?;
        let sim_time = Some(recorder.time_of(report.tick));
        for event in recorder.events(&report, None) {
            cursor.check(tick, sim_time, event, out)?;
        }
    }
    let tick = drive.world().tick;
    out.ticks += tick;
    if !cursor.done() {
        return Err(Error::Divergence {
            tick,
            stage: stage.to_string(),
            detail: format!(
                "drive ended but the log continues with {}",
                describe(&cursor.expected[cursor.pos].event)
            ),
        });
    }
    if drive.ended().is_none() && !aborted {
        return Err(Error::Divergence {
            tick,
            stage: stage.to_string(),
            detail: "log ends before the drive does".into(),
        });
    }
    if aborted {
        out.records.push(strip(&slice[slice.len() - 1]));
    }
    Ok(())
}
