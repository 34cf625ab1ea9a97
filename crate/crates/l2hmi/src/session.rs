//! The protocol runner shared by live and headless sessions.
//!
//! [`run_session`] walks a participant through every stage, runs the drives
//! tick by tick and writes the log. Everything mode-specific (where inputs
//! and questionnaire answers come from, where frames go, pacing) sits
//! behind [`SessionIo`].

use std::io::Write;

use l2hmi_core::automation::{CommandSource, ControlCommand};
use l2hmi_core::drive::{Drive, PreTick, TickReport};
use l2hmi_core::experiment::{
    validate_submission, LogEvent, LogRecord, Participant, Protocol, QuestionnaireDef, Stage,
    Submission,
};
use l2hmi_core::scenario::EndReason;
use l2hmi_core::Config;

use crate::logfile::LogWriter;
use crate::{Error, Result};

/// Driver input for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickInput {
    pub command: ControlCommand,
    /// When the input reached the server, ms since session start.
    pub received_ms: Option<u64>,
}

impl TickInput {
    pub fn idle() -> Self {
        Self {
            command: ControlCommand::idle(CommandSource::Driver),
            received_ms: None,
        }
    }
}

pub trait SessionIo {
    /// Milliseconds since the session started, or `None` to keep the log
    /// free of wall-clock data.
    fn wall_ms(&self) -> Option<u64> {
        None
    }

    fn stage_started(&mut self, stage: Stage, hmi: bool) -> Result<()>;

    /// Blocks until an instruction stage (briefing, HMI explanation) is done.
    fn await_completion(&mut self, stage: Stage) -> Result<()>;

    /// Collects a submission; `rejected` explains why the previous one was
    /// refused.
    fn questionnaire(
        &mut self,
        def: &QuestionnaireDef,
        administration: u8,
        rejected: Option<&str>,
    ) -> Result<Submission>;

    fn drive_started(&mut self, _drive: &Drive) -> Result<()> {
        Ok(())
    }

    /// Polled before every tick; `true` if the driver pressed the
    /// automation toggle since the last poll.
    fn poll_toggle(&mut self) -> Result<bool> {
        Ok(false)
    }

    fn input(&mut self, pre: &PreTick<'_>) -> TickInput;

    /// Called after every tick with the post-step world.
    fn tick_done(&mut self, _drive: &Drive, _report: &TickReport) -> Result<()> {
        Ok(())
    }

    fn drive_ended(&mut self, _reason: EndReason) -> Result<()> {
        Ok(())
    }

    fn session_ended(&mut self, _reason: &str) -> Result<()> {
        Ok(())
    }
}

/// Turns tick reports into log events. Replay uses the same recorder so a
/// re-simulated drive yields the same records.
#[derive(Debug, Clone)]
pub struct DriveRecorder {
    last_input: ControlCommand,
    tick_rate: f64,
}

impl DriveRecorder {
    pub fn new(cfg: &Config) -> Self {
        Self {
            last_input: ControlCommand::idle(CommandSource::Driver),
            tick_rate: f64::from(cfg.sim.tick_rate_hz),
        }
    }

    pub fn time_of(&self, tick: u64) -> f64 {
        tick as f64 / self.tick_rate
    }

    /// Events for one tick, in log order.
    pub fn events(&mut self, report: &TickReport, received_ms: Option<u64>) -> Vec<LogEvent> {
        let mut out = Vec::new();
        let cmd = report.driver;
        if cmd.longitudinal != self.last_input.longitudinal || cmd.steering != self.last_input.steering {
            self.last_input = cmd;
            out.push(LogEvent::Input {
                tick: report.tick,
                command: cmd,
                received_ms,
            });
        }
        out.extend(report.fired.iter().map(|f| LogEvent::EventFired { record: f.clone() }));
        out.extend(report.onsets.iter().map(|o| LogEvent::Onset { record: *o }));
        if let Some(frame) = &report.detections {
            out.push(LogEvent::Detections {
                frame: frame.clone(),
            });
        }
        if let Some(record) = report.disengaged {
            out.push(LogEvent::Disengaged {
                tick: report.tick,
                record,
            });
        }
        out.extend(report.collisions.iter().map(|c| LogEvent::Collision { record: *c }));
        if let Some(snapshot) = &report.checkpoint {
            out.push(LogEvent::Checkpoint {
                snapshot: snapshot.clone(),
            });
        }
        if let Some(reason) = report.ended {
            let tick = report.tick + 1;
            out.push(LogEvent::DriveEnded {
                tick,
                time: self.time_of(tick),
                reason,
            });
        }
        out
    }
}

struct Recorder<W: Write> {
    writer: LogWriter<W>,
    records: Vec<LogRecord>,
}

impl<W: Write> Recorder<W> {
    fn push(&mut self, sim_time: Option<f64>, wall_ms: Option<u64>, event: LogEvent) -> Result<()> {
        let record = LogRecord {
            seq: self.records.len() as u64,
            sim_time,
            wall_ms,
            event,
        };
        self.writer
            .record(&record)
            .map_err(|e| Error::io("session log", e))?;
        self.records.push(record);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub records: Vec<LogRecord>,
    /// Set when the session stopped early.
    pub aborted: Option<String>,
}

/// Runs `participant` through the whole protocol, logging to `writer`.
///
/// Any error from `io` ends the session with an `aborted` record and a
/// sealed log. A client disconnect is reported through
/// [`SessionOutcome::aborted`]; other errors are returned after the log is
/// finalised.
pub fn run_session<W: Write, I: SessionIo>(
    cfg: &Config,
    participant: Participant,
    scenario_seed: u64,
    io: &mut I,
    writer: LogWriter<W>,
) -> Result<(SessionOutcome, W)> {
    let mut rec = Recorder {
        writer,
        records: Vec::new(),
    };
    let result = run_protocol(cfg, participant, scenario_seed, io, &mut rec);
    let aborted = match &result {
        Ok(()) => None,
        Err(e) => {
            let reason = e.to_string();
            rec.push(None, io.wall_ms(), LogEvent::Aborted { reason: reason.clone() })?;
            Some(reason)
        }
    };
    let Recorder { writer, records } = rec;
    let out = writer.finish().map_err(|e| Error::io("session log", e))?;
    match result {
        Ok(()) | Err(Error::Disconnected(_)) => Ok((SessionOutcome { records, aborted }, out)),
        Err(e) => Err(e),
    }
}

fn run_protocol<W: Write, I: SessionIo>(
    cfg: &Config,
    participant: Participant,
    scenario_seed: u64,
    io: &mut I,
    rec: &mut Recorder<W>,
) -> Result<()> {
    let id = participant.id.clone();
    let mut protocol = Protocol::new(participant);
    loop {
        let stage = protocol.current();
        let hmi = protocol.hmi_enabled();
        rec.push(None, io.wall_ms(), LogEvent::StageStarted { stage })?;
        io.stage_started(stage, hmi)?;
        if stage == Stage::End {
            io.session_ended("complete")?;
            return Ok(());
        }
        if let Some((q, administration)) = stage.questionnaire() {
            let def = cfg.experiment.questionnaire(q);
            let mut rejected: Option<String> = None;
            loop {
                let submission = io.questionnaire(def, administration, rejected.as_deref())?;
                if submission.administration != administration {
                    rejected = Some(format!("expected administration {administration}"));
                    continue;
                }
                match validate_submission(def, &id, &submission) {
                    Ok(responses) => {
                        rec.push(None, io.wall_ms(), LogEvent::QuestionnaireSubmitted { submission })?;
                        for response in responses {
                            rec.push(None, io.wall_ms(), LogEvent::Response { response })?;
                        }
                        break;
                    }
                    Err(e) => rejected = Some(e.to_string()),
                }
            }
        } else if stage.is_drive() {
            run_drive(cfg, stage, scenario_seed, hmi, io, rec)?;
        } else {
            io.await_completion(stage)?;
        }
        rec.push(None, io.wall_ms(), LogEvent::StageCompleted { stage })?;
        protocol.complete(stage)?;
    }
}

fn run_drive<W: Write, I: SessionIo>(
    cfg: &Config,
    stage: Stage,
    seed: u64,
    hmi: bool,
    io: &mut I,
    rec: &mut Recorder<W>,
) -> Result<()> {
    let mut drive = Drive::for_stage(cfg, stage, seed, hmi)?;
    let variant = drive.runtime().script().variant;
    rec.push(
        Some(0.0),
        io.wall_ms(),
        LogEvent::DriveStarted {
            stage,
            variant,
            seed,
            hmi,
        },
    )?;
    io.drive_started(&drive)?;
    let mut recorder = DriveRecorder::new(cfg);
    while drive.ended().is_none() {
        if io.poll_toggle()? {
            if let Some(record) = drive.manual_disengage() {
                let tick = drive.world().tick;
                rec.push(
                    Some(recorder.time_of(tick)),
                    io.wall_ms(),
                    LogEvent::Disengaged { tick, record },
                )?;
            }
        }
        let mut received = None;
        let report = drive.tick(|pre| {
            let input = io.input(pre);
            received = input.received_ms;
            input.command
        })?;
        let sim_time = Some(recorder.time_of(report.tick));
        for event in recorder.events(&report, received) {
            rec.push(sim_time, io.wall_ms(), event)?;
        }
        io.tick_done(&drive, &report)?;
        if let Some(reason) = report.ended {
            io.drive_ended(reason)?;
        }
    }
    Ok(())
}
