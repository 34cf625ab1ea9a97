#![allow(dead_code)]

use l2hmi_core::agent::{AgentSpec, ScriptedAgent};
use l2hmi_core::automation::{CommandSource, ControlCommand, DisengageRecord};
use l2hmi_core::drive::Drive;
use l2hmi_core::experiment::Stage;
use l2hmi_core::perception::DetectionFrame;
use l2hmi_core::scenario::{EndReason, FiredRecord, OnsetRecord, Variant};
use l2hmi_core::sim::CollisionRecord;
use l2hmi_core::Config;

#[derive(Debug, Default)]
pub struct RunLog {
    pub fired: Vec<FiredRecord>,
    pub onsets: Vec<OnsetRecord>,
    pub frames: Vec<DetectionFrame>,
    pub collisions: Vec<CollisionRecord>,
    pub disengaged: Option<DisengageRecord>,
    pub end: Option<EndReason>,
    pub ticks: u64,
}

pub fn scenario_drive(cfg: &Config, variant: Variant, seed: u64, hmi: bool) -> Drive {
    Drive::for_stage(cfg, Stage::Scenario { index: 1, variant }, seed, hmi).unwrap()
}

/// Runs `drive` to its end, with `agent` as the driver or no input at all.
pub fn run(cfg: &Config, mut drive: Drive, mut agent: Option<ScriptedAgent>) -> RunLog {
    let mut log = RunLog::default();
    if let Some(a) = agent.as_mut() {
        a.reset_drive();
    }
    while drive.ended().is_none() {
        let r = drive
            .tick(|pre| match agent.as_mut() {
                Some(a) => {
                    for o in pre.onsets {
                        a.observe_onset(o, &cfg.sim);
                    }
                    a.input(pre.tick)
                }
                None => ControlCommand::idle(CommandSource::Driver),
            })
            .unwrap();
        log.fired.extend(r.fired);
        log.onsets.extend(r.onsets);
        log.frames.extend(r.detections);
        log.collisions.extend(r.collisions);
        if r.disengaged.is_some() {
            log.disengaged = r.disengaged;
        }
        log.end = r.ended;
    }
    log.ticks = drive.world().tick;
    log
}

pub fn agent(delay: f64, miss: f64, seed: u64) -> ScriptedAgent {
    ScriptedAgent::new(AgentSpec {
        reaction_delay: delay,
        brake_magnitude: 1.0,
        miss_probability: miss,
        seed,
    })
    .unwrap()
}
