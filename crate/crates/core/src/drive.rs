//! The per-tick pipeline shared by live, headless and replayed drives.
//!
//! Each [`Drive::tick`] runs, in order: scenario triggers, perception (on
//! frame ticks), driver input, intervention detection, automation or driver
//! actuation, the world step, collision and checkpoint bookkeeping, and the
//! end-of-drive check.

use alloc::vec::Vec;
use core::fmt;

use crate::automation::{
    acc_command, arbitrate, detect_intervention, lkas_command, manual_disengage, AutomationError,
    AutomationState, CommandSource, ControlCommand, DisengageRecord, LeadMeasurement,
};
use crate::config::Config;
use crate::experiment::{Snapshot, Stage};
use crate::perception::{DetectionFrame, OverlayStream};
use crate::scenario::{
    compile_scenario, initial_world, practice_script, EndReason, FiredRecord, OnsetRecord,
    ScenarioError, ScenarioRuntime, ScenarioScript,
};
use crate::sim::{advance, leading_vehicle, CollisionRecord, SimError, WorldState};

#[derive(Debug, Clone, PartialEq)]
pub enum DriveError {
    Sim(SimError),
    Scenario(ScenarioError),
    Automation(AutomationError),
    NotADrive(Stage),
    Finished,
}

impl fmt::Display for DriveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriveError::Sim(e) => write!(f, "simulation: {e}"),
            DriveError::Scenario(e) => write!(f, "scenario: {e}"),
            DriveError::Automation(e) => write!(f, "automation: {e}"),
            DriveError::NotADrive(s) => write!(f, "stage {s} is not a drive"),
            DriveError::Finished => f.write_str("drive already ended"),
        }
    }
}

impl From<SimError> for DriveError {
    fn from(e: SimError) -> Self {
        DriveError::Sim(e)
    }
}

impl From<ScenarioError> for DriveError {
    fn from(e: ScenarioError) -> Self {
        DriveError::Scenario(e)
    }
}

impl From<AutomationError> for DriveError {
    fn from(e: AutomationError) -> Self {
        DriveError::Automation(e)
    }
}

/// What the driver sees before choosing this tick's input.
#[derive(Debug, Clone, Copy)]
pub struct PreTick<'a> {
    pub tick: u64,
    pub time: f64,
    pub world: &'a WorldState,
    pub fired: &'a [FiredRecord],
    pub onsets: &'a [OnsetRecord],
    pub detections: Option<&'a DetectionFrame>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    /// Tick at which the inputs were applied (before the step).
    pub tick: u64,
    pub fired: Vec<FiredRecord>,
    pub onsets: Vec<OnsetRecord>,
    pub detections: Option<DetectionFrame>,
    pub driver: ControlCommand,
    pub actuated: ControlCommand,
    pub disengaged: Option<DisengageRecord>,
    pub collisions: Vec<CollisionRecord>,
    pub checkpoint: Option<Snapshot>,
    pub ended: Option<EndReason>,
}

#[derive(Debug, Clone)]
pub struct Drive {
    cfg: Config,
    world: WorldState,
    runtime: ScenarioRuntime,
    automation: AutomationState,
    overlay: OverlayStream,
}

impl Drive {
    pub fn new(cfg: &Config, script: ScenarioScript, hmi: bool) -> Self {
        let (world, leader) = initial_world(&script, &cfg.sim);
        let runtime = ScenarioRuntime::new(
            script,
            leader,
            cfg.scenario.run_tail,
            cfg.scenario.despawn_distance,
        );
        Self {
            cfg: cfg.clone(),
            world,
            runtime,
            automation: AutomationState::engaged(),
            overlay: OverlayStream::new(hmi, &cfg.sim),
        }
    }

    /// The drive for a practice or scenario stage.
    pub fn for_stage(cfg: &Config, stage: Stage, seed: u64, hmi: bool) -> Result<Self, DriveError> {
        let script = match stage {
            Stage::Practice => practice_script(&cfg.scenario, &cfg.sim)?,
            Stage::Scenario { variant, .. } => {
                compile_scenario(variant, seed, &cfg.scenario, &cfg.sim)?
            }
            other => return Err(DriveError::NotADrive(other)),
        };
        Ok(Self::new(cfg, script, hmi))
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn runtime(&self) -> &ScenarioRuntime {
        &self.runtime
    }

    pub fn automation(&self) -> &AutomationState {
        &self.automation
    }

    pub fn hmi(&self) -> bool {
        self.overlay.enabled()
    }

    pub fn frames_emitted(&self) -> u64 {
        self.overlay.frames_emitted()
    }

    pub fn ended(&self) -> Option<EndReason> {
        self.runtime.end_reason()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::of(&self.world, self.automation.engaged)
    }

    /// Switches automation off as if the driver pressed the toggle.
    pub fn manual_disengage(&mut self) -> Option<DisengageRecord> {
        let before = self.automation.disengage;
        self.automation = manual_disengage(&self.automation, self.world.time);
        if before.is_none() {
            self.automation.disengage
        } else {
            None
        }
    }

    /// Runs one tick. `driver` is asked for its input after triggers and
    /// perception for this tick have run.
    pub fn tick(
        &mut self,
        driver: impl FnOnce(&PreTick<'_>) -> ControlCommand,
    ) -> Result<TickReport, DriveError> {
        if self.ended().is_some() {
            return Err(DriveError::Finished);
        }
        let sim = &self.cfg.sim;
        let tick = self.world.tick;
        let time = sim.time_of(tick);

        let triggered = self
            .runtime
            .trigger_events(&mut self.world, sim, &self.cfg.perception)?;
        let detections = self.overlay.frame(&self.world, &self.cfg.perception, sim);

        let input = driver(&PreTick {
            tick,
            time,
            world: &self.world,
            fired: &triggered.fired,
            onsets: &triggered.onsets,
            detections: detections.as_ref(),
        });
        let input = ControlCommand::new(input.longitudinal, input.steering, CommandSource::Driver);
        if !input.is_finite() {
            return Err(DriveError::Sim(SimError::NonFinite("driver command")));
        }

        let was_engaged = self.automation.engaged;
        let mut state = detect_intervention(
            &input,
            &self.cfg.automation.thresholds,
            &self.automation,
            time,
        );
        let disengaged = if was_engaged && !state.engaged {
            state.disengage
        } else {
            None
        };

        let automation_cmd = if state.engaged {
            let leader = leading_vehicle(&self.world, sim);
            let lead = leader.map(|l| LeadMeasurement::between(&self.world.ego, &self.world.ego_extent, l));
            let (long, next) = acc_command(
                &self.world.ego,
                lead.as_ref(),
                &state,
                &self.cfg.automation.acc,
                sim.dt(),
            )?;
            let steer = lkas_command(
                &self.world.ego,
                leader,
                &self.cfg.automation.lkas,
                &self.world.road,
            )?;
            state = next;
            Some(ControlCommand::new(long, steer, CommandSource::Automation))
        } else {
            None
        };
        let actuated = arbitrate(automation_cmd, &input, &state);
        self.automation = state;

        let before = self.world.collisions.len();
        advance(&mut self.world, &actuated, sim.dt(), sim)?;
        let collisions = self.world.collisions[before..].to_vec();

        let checkpoint = self.world.tick.is_multiple_of(self.cfg.session.checkpoint_interval)
            .then(|| Snapshot::of(&self.world, self.automation.engaged));
        let ended = self.runtime.check_end(&self.world, &self.cfg.sim);

        Ok(TickReport {
            tick,
            fired: triggered.fired,
            onsets: triggered.onsets,
            detections,
            driver: input,
            actuated,
            disengaged,
            collisions,
            checkpoint,
            ended,
        })
    }
}
