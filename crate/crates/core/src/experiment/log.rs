use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{LikertResponse, Stage, Submission};
use crate::automation::{ControlCommand, DisengageRecord};
use crate::perception::DetectionFrame;
use crate::scenario::{EndReason, FiredRecord, OnsetRecord, Variant};
use crate::sim::{ActorClass, ActorId, CollisionRecord, VehicleState, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorSnapshot {
    pub id: ActorId,
    pub class: ActorClass,
    pub state: VehicleState,
}

/// Compact world checkpoint compared bit for bit on replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub ego: VehicleState,
    pub actors: Vec<ActorSnapshot>,
    pub engaged: bool,
    pub collisions: usize,
}

impl Snapshot {
    pub fn of(world: &WorldState, engaged: bool) -> Self {
        Self {
            tick: world.tick,
            ego: world.ego,
            actors: world
                .actors
                .iter()
                .map(|a| ActorSnapshot {
                    id: a.id,
                    class: a.class,
                    state: a.state,
                })
                .collect(),
            engaged,
            collisions: world.collisions.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEvent {
    StageStarted {
        stage: Stage,
    },
    StageCompleted {
        stage: Stage,
    },
    DriveStarted {
        stage: Stage,
        variant: Option<Variant>,
        seed: u64,
        hmi: bool,
    },
    /// Driver input that takes effect at `tick`; only changes are logged.
    Input {
        tick: u64,
        command: ControlCommand,
        /// Wall-clock receive time in live mode.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        received_ms: Option<u64>,
    },
    Detections {
        frame: DetectionFrame,
    },
    EventFired {
        record: FiredRecord,
    },
    Onset {
        record: OnsetRecord,
    },
    Disengaged {
        tick: u64,
        record: DisengageRecord,
    },
    Collision {
        record: CollisionRecord,
    },
    Checkpoint {
        snapshot: Snapshot,
    },
    DriveEnded {
        tick: u64,
        time: f64,
        reason: EndReason,
    },
    QuestionnaireSubmitted {
        submission: Submission,
    },
    Response {
        response: LikertResponse,
    },
    Aborted {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    /// Simulated seconds since the start of the current drive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim_time: Option<f64>,
    /// Milliseconds since the session started; absent in headless runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
    pub event: LogEvent,
}

/// The records of one drive, from its `DriveStarted` to its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSlice<'a> {
    pub stage: Stage,
    pub variant: Option<Variant>,
    pub seed: u64,
    pub hmi: bool,
    pub records: &'a [LogRecord],
}

pub fn split_drives(records: &[LogRecord]) -> Vec<DriveSlice<'_>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < records.len() {
        if let LogEvent::DriveStarted {
            stage,
            variant,
            seed,
            hmi,
        } = records[i].event
        {
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
            out.push(DriveSlice {
                stage,
                variant,
                seed,
                hmi,
                records: &records[i..j],
            });
            i = j;
        } else {
            i += 1;
        }
    }
    out
}
