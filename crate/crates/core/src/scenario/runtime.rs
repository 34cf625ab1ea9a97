use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{OnsetRule, RiskEvent, RiskKind, ScenarioError, ScenarioScript, SpawnSpec};
use crate::perception::{occluded_fraction, visible_actors, PerceptionConfig};
use crate::sim::{ActorClass, ActorId, EventId, MotionScript, SimConfig, VehicleState, WorldState};
use crate::geometry::Vec2;
use crate::sim::LanePosition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetRecord {
    pub event: EventId,
    pub kind: RiskKind,
    pub tick: u64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiredRecord {
    pub event: EventId,
    pub kind: RiskKind,
    pub tick: u64,
    pub time: f64,
    pub actors: Vec<ActorId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriggerOutput {
    pub fired: Vec<FiredRecord>,
    pub onsets: Vec<OnsetRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    /// The run tail after the apparent risk resolved has elapsed.
    Resolved,
    RoadEnd,
    DurationLimit,
    /// Safety stop for drives that never finish on their own.
    Timeout,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct EventState {
    armed: Option<u64>,
    fired: Option<u64>,
    actors: Vec<ActorId>,
    onset: Option<OnsetRecord>,
}

/// Tracks which events have fired during one drive.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRuntime {
    script: ScenarioScript,
    leader: ActorId,
    states: Vec<EventState>,
    last_tick: Option<u64>,
    resolution_tick: Option<u64>,
    end: Option<EndReason>,
    run_tail: f64,
    despawn_distance: f64,
}

impl ScenarioRuntime {
    pub fn new(script: ScenarioScript, leader: ActorId, run_tail: f64, despawn_distance: f64) -> Self {
        let states = script.events.iter().map(|_| EventState::default()).collect();
        Self {
            script,
            leader,
            states,
            last_tick: None,
            resolution_tick: None,
            end: None,
            run_tail,
            despawn_distance,
        }
    }

    pub fn script(&self) -> &ScenarioScript {
        &self.script
    }

    pub fn leader(&self) -> ActorId {
        self.leader
    }

    pub fn end_reason(&self) -> Option<EndReason> {
        self.end
    }

    pub fn onsets(&self) -> Vec<OnsetRecord> {
        self.states.iter().filter_map(|s| s.onset).collect()
    }

    pub fn onset(&self, event: EventId) -> Option<OnsetRecord> {
        self.index(event).and_then(|i| self.states[i].onset)
    }

    pub fn fired_tick(&self, event: EventId) -> Option<u64> {
        self.index(event).and_then(|i| self.states[i].fired)
    }

    pub fn event_actors(&self, event: EventId) -> &[ActorId] {
        self.index(event).map_or(&[], |i| &self.states[i].actors)
    }

    pub fn apparent_onset(&self) -> Option<OnsetRecord> {
        self.onsets().into_iter().find(|o| o.kind.is_apparent())
    }

    /// Tick at which the apparent risk counted as resolved.
    pub fn resolution_tick(&self) -> Option<u64> {
        self.resolution_tick
    }

    fn index(&self, event: EventId) -> Option<usize> {
        self.script.events.iter().position(|e| e.id == event)
    }

    /// Arms events the ego has reached, spawns their actors and records
    /// onsets. Must be called exactly once per tick, before perception.
    pub fn trigger_events(
        &mut self,
        world: &mut WorldState,
        sim: &SimConfig,
        perception: &PerceptionConfig,
    ) -> Result<TriggerOutput, ScenarioError> {
        if let Some(last) = self.last_tick {
            if world.tick <= last {
                return Err(ScenarioError::NonMonotoneTick {
                    last,
                    got: world.tick,
                });
            }
        }
        self.last_tick = Some(world.tick);

        let ego_s = world.ego.position.s;
        let leader = self.leader;
        let range = self.despawn_distance;
        world.despawn_where(|a| a.id != leader && (a.state.position.s - ego_s).abs() > range);

        let mut out = TriggerOutput::default();
        let leader_s = world.actor(leader).map(|a| a.state.position.s);
        for i in 0..self.script.events.len() {
            let event = &self.script.events[i];
            if self.states[i].armed.is_none() && ego_s >= event.trigger_s {
                self.states[i].armed = Some(world.tick);
            }
            if self.states[i].armed.is_none() || self.states[i].fired.is_some() {
                continue;
            }
            if let SpawnSpec::Pylons {
                after_leader_s: Some(at),
                ..
            } = event.spawn
            {
                if leader_s.is_none_or(|s| s < at) {
                    continue;
                }
            }
            let record = self.fire(i, world, sim)?;
            out.fired.push(record);
        }

        let pending: Vec<usize> = (0..self.states.len())
            .filter(|&i| self.states[i].fired.is_some() && self.states[i].onset.is_none())
            .collect();
        if !pending.is_empty() {
            let visible = visible_actors(world, &perception.camera);
            for i in pending {
                let event = &self.script.events[i];
                let seen = match event.onset_rule {
                    OnsetRule::MotionStart => true,
                    OnsetRule::FirstVisible => visible.iter().any(|p| {
                        self.states[i].actors.contains(&p.id)
                            && occluded_fraction(p, &visible) < perception.occlusion_threshold
                    }),
                };
                if seen {
                    let onset = OnsetRecord {
                        event: event.id,
                        kind: event.kind,
                        tick: world.tick,
                        time: sim.time_of(world.tick),
                    };
                    self.states[i].onset = Some(onset);
                    out.onsets.push(onset);
                }
            }
        }
        Ok(out)
    }

    fn fire(
        &mut self,
        i: usize,
        world: &mut WorldState,
        sim: &SimConfig,
    ) -> Result<FiredRecord, ScenarioError> {
        let event: &RiskEvent = &self.script.events[i];
        if self.states[i].fired.is_some() {
            return Err(ScenarioError::DoubleFire(event.id));
        }
        let mut actors = Vec::new();
        match &event.spawn {
            SpawnSpec::EnteringCar {
                path,
                accel,
                cruise_speed,
                stop_decel,
            } => {
                let motion = MotionScript::new(path.clone(), *accel, *cruise_speed, *stop_decel);
                let (position, heading) = motion.sample(0.0);
                let state = VehicleState {
                    position,
                    heading,
                    speed: 0.0,
                    lane: LanePosition::OffRoad,
                };
                actors.push(world.spawn(
                    ActorClass::Car,
                    state,
                    ActorClass::Car.default_extent(),
                    Some(motion),
                    Some(event.id),
                ));
            }
            SpawnSpec::Pylons { positions, .. } => {
                for &position in positions {
                    let state = VehicleState {
                        position,
                        heading: 0.0,
                        speed: 0.0,
                        lane: LanePosition::OffRoad,
                    };
                    actors.push(world.spawn(
                        ActorClass::Pylon,
                        state,
                        ActorClass::Pylon.default_extent(),
                        None,
                        Some(event.id),
                    ));
                }
            }
            SpawnSpec::Motorcycle {
                behind,
                lane_d,
                speed,
            } => {
                let start = Vec2::new(world.ego.position.s - behind, *lane_d);
                let end = Vec2::new(world.road.total_length + 1000.0, *lane_d);
                let motion = MotionScript::new(alloc::vec![start, end], 0.0, *speed, None);
                let state = VehicleState {
                    position: start,
                    heading: 0.0,
                    speed: *speed,
                    lane: LanePosition::OffRoad,
                };
                actors.push(world.spawn(
                    ActorClass::Motorcycle,
                    state,
                    ActorClass::Motorcycle.default_extent(),
                    Some(motion),
                    Some(event.id),
                ));
            }
        }
        self.states[i].fired = Some(world.tick);
        self.states[i].actors = actors.clone();
        Ok(FiredRecord {
            event: event.id,
            kind: event.kind,
            tick: world.tick,
            time: sim.time_of(world.tick),
            actors,
        })
    }

    /// Decides whether the drive is over. Call after each step.
    pub fn check_end(&mut self, world: &WorldState, sim: &SimConfig) -> Option<EndReason> {
        if self.end.is_some() {
            return self.end;
        }
        if let Some(limit) = self.script.duration_limit {
            if world.time >= limit {
                self.end = Some(EndReason::DurationLimit);
                return self.end;
            }
        }
        let ego_front = world.ego.position.s + 0.5 * world.ego_extent.length;
        if ego_front >= world.road.total_length {
            self.end = Some(EndReason::RoadEnd);
            return self.end;
        }
        if self.resolution_tick.is_none() {
            self.resolution_tick = self.detect_resolution(world);
        }
        if let Some(resolved) = self.resolution_tick {
            if world.tick >= resolved + sim.ticks_for(self.run_tail) {
                self.end = Some(EndReason::Resolved);
                return self.end;
            }
        }
        let cap = 2.0 * world.road.total_length / self.script.leader.speed + 120.0;
        if world.time > cap {
            self.end = Some(EndReason::Timeout);
        }
        self.end
    }

    fn detect_resolution(&self, world: &WorldState) -> Option<u64> {
        let i = self
            .script
            .events
            .iter()
            .position(|e| e.kind.is_apparent())?;
        let onset = self.states[i].onset?;
        if world.tick < onset.tick {
            return None;
        }
        let actors = &self.states[i].actors;
        let collided = world
            .collisions
            .iter()
            .any(|c| c.tick >= onset.tick && actors.contains(&c.other_actor));
        let stopped = world.ego.speed == 0.0;
        let hazard_end = actors
            .iter()
            .filter_map(|id| world.actor(*id))
            .map(|a| a.state.position.s + a.footprint().half_extent_s())
            .fold(f64::NEG_INFINITY, f64::max);
        let ego_rear = world.ego.position.s - 0.5 * world.ego_extent.length;
        let passed = hazard_end.is_finite() && ego_rear > hazard_end;
        (collided || stopped || passed).then_some(world.tick)
    }
}
