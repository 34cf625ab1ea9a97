//! Fixed-timestep world simulation.
//!
//! [`step`] is a pure transition: the next [`WorldState`] depends only on the
//! current state, the ego command and the [`SimConfig`]. All transcendental
//! maths goes through `libm`, so trajectories are bit-reproducible.

mod actor;
mod road;

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use actor::{Actor, ActorClass, ActorId, EventId, Extent, MotionScript, VehicleState};
pub use road::{Intersection, LanePosition, RoadNetwork};

use crate::automation::ControlCommand;
use crate::geometry::{OrientedRect, Vec2};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub tick_rate_hz: u32,
    /// Perception runs on every `detection_divisor`-th tick.
    pub detection_divisor: u32,
    pub wheelbase: f64,
    /// Distance from the rear axle to the reference point (body centre).
    pub rear_axle_to_center: f64,
    pub max_accel: f64,
    pub max_decel: f64,
    pub max_steer_angle: f64,
    pub max_speed: f64,
    pub ego_extent: Extent,
    /// How far ahead ACC looks for a vehicle to follow.
    pub sensing_range: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tick_rate_hz: 60,
            detection_divisor: 4,
            wheelbase: 2.7,
            rear_axle_to_center: 1.35,
            max_accel: 4.0,
            max_decel: 4.0,
            max_steer_angle: 0.5,
            max_speed: 40.0,
            ego_extent: ActorClass::Car.default_extent(),
            sensing_range: 100.0,
        }
    }
}

impl SimConfig {
    pub fn dt(&self) -> f64 {
        1.0 / f64::from(self.tick_rate_hz)
    }

    /// Simulated time at `tick`, computed by division so tick grids stay exact.
    pub fn time_of(&self, tick: u64) -> f64 {
        tick as f64 / f64::from(self.tick_rate_hz)
    }

    /// Number of whole ticks closest to `seconds`.
    pub fn ticks_for(&self, seconds: f64) -> u64 {
        math::round(seconds * f64::from(self.tick_rate_hz)).max(0.0) as u64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            self.wheelbase,
            self.rear_axle_to_center,
            self.max_accel,
            self.max_decel,
            self.max_steer_angle,
            self.max_speed,
            self.sensing_range,
        ];
        if self.tick_rate_hz == 0
            || self.detection_divisor == 0
            || positive.iter().any(|v| !v.is_finite() || *v <= 0.0)
            || !self.ego_extent.is_valid()
            || self.rear_axle_to_center > self.wheelbase
        {
            return Err(SimError::InvalidConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    NonFinite(&'static str),
    TickMismatch { expected: f64, got: f64 },
    InvalidConfig,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::NonFinite(what) => write!(f, "non-finite value in {what}"),
            SimError::TickMismatch { expected, got } => {
                write!(f, "step called with dt={got}, configured tick is {expected}")
            }
            SimError::InvalidConfig => f.write_str("invalid simulation config"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub tick: u64,
    pub time: f64,
    pub ego_position: Vec2,
    pub other_actor: ActorId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub time: f64,
    pub ego: VehicleState,
    pub ego_extent: Extent,
    pub actors: Vec<Actor>,
    pub road: RoadNetwork,
    pub collisions: Vec<CollisionRecord>,
    /// Actors currently touching the ego; a new record is written only when
    /// contact starts.
    pub contacts: Vec<ActorId>,
    pub next_actor_id: u32,
}

impl WorldState {
    pub fn new(road: RoadNetwork, mut ego: VehicleState, ego_extent: Extent) -> Self {
        ego.lane = road.lane_at(ego.position.s, ego.position.d);
        Self {
            tick: 0,
            time: 0.0,
            ego,
            ego_extent,
            actors: Vec::new(),
            road,
            collisions: Vec::new(),
            contacts: Vec::new(),
            next_actor_id: 1,
        }
    }

    pub fn spawn(
        &mut self,
        class: ActorClass,
        mut state: VehicleState,
        extent: Extent,
        motion: Option<MotionScript>,
        event: Option<EventId>,
    ) -> ActorId {
        let id = ActorId(self.next_actor_id);
        self.next_actor_id += 1;
        state.lane = self.road.lane_at(state.position.s, state.position.d);
        if class == ActorClass::Pylon {
            state.speed = 0.0;
        }
        self.actors.push(Actor {
            id,
            class,
            state,
            extent,
            motion: if class == ActorClass::Pylon { None } else { motion },
            event,
        });
        id
    }

    pub fn actor(&self, id: ActorId) -> Option<&Actor> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn ego_footprint(&self) -> OrientedRect {
        self.ego.footprint(&self.ego_extent)
    }

    /// Removes actors matching `pred`, except those in contact with the ego.
    pub fn despawn_where(&mut self, mut pred: impl FnMut(&Actor) -> bool) {
        let contacts = &self.contacts;
        self.actors
            .retain(|a| contacts.contains(&a.id) || !pred(a));
    }
}

/// Lane occupied by `vehicle`'s centre.
pub fn lane_of(vehicle: &VehicleState, road: &RoadNetwork) -> LanePosition {
    road.lane_at(vehicle.position.s, vehicle.position.d)
}

/// Bumper-to-bumper distance along the road from the ego front to `actor`'s
/// nearest face. Negative when they overlap longitudinally.
pub fn longitudinal_gap(ego: &VehicleState, ego_extent: &Extent, actor: &Actor) -> f64 {
    let ego_front = ego.position.s + ego.footprint(ego_extent).half_extent_s();
    let actor_rear = actor.state.position.s - actor.footprint().half_extent_s();
    actor_rear - ego_front
}

/// Nearest car, bus or truck ahead of the ego in the ego's current lane and
/// within sensing range.
pub fn leading_vehicle<'w>(world: &'w WorldState, cfg: &SimConfig) -> Option<&'w Actor> {
    let ego_lane = lane_of(&world.ego, &world.road).index()?;
    world
        .actors
        .iter()
        .filter(|a| a.class.is_vehicle())
        .filter(|a| a.state.position.s > world.ego.position.s)
        .filter(|a| lane_of(&a.state, &world.road).index() == Some(ego_lane))
        .map(|a| (longitudinal_gap(&world.ego, &world.ego_extent, a), a))
        .filter(|(gap, _)| *gap <= cfg.sensing_range)
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.id.cmp(&y.1.id)))
        .map(|(_, a)| a)
}

/// Pure form of [`advance`].
pub fn step(
    world: &WorldState,
    ego_cmd: &ControlCommand,
    dt: f64,
    cfg: &SimConfig,
) -> Result<WorldState, SimError> {
    let mut next = world.clone();
    advance(&mut next, ego_cmd, dt, cfg)?;
    Ok(next)
}

/// Advances the world by one tick in place. Validation happens before any
/// mutation, so on error `world` is untouched.
pub fn advance(
    world: &mut WorldState,
    ego_cmd: &ControlCommand,
    dt: f64,
    cfg: &SimConfig,
) -> Result<(), SimError> {
    let expected = cfg.dt();
    if (dt - expected).abs() > 1e-12 {
        return Err(SimError::TickMismatch { expected, got: dt });
    }
    if !ego_cmd.longitudinal.is_finite() || !ego_cmd.steering.is_finite() {
        return Err(SimError::NonFinite("ego command"));
    }
    if !world.ego.is_finite() {
        return Err(SimError::NonFinite("ego state"));
    }
    if world.actors.iter().any(|a| !a.state.is_finite()) {
        return Err(SimError::NonFinite("actor state"));
    }

    let long = ego_cmd.longitudinal.clamp(-1.0, 1.0);
    let steer = ego_cmd.steering.clamp(-1.0, 1.0);
    integrate_ego(&mut world.ego, long, steer, dt, cfg);
    world.ego.lane = lane_of(&world.ego, &world.road);

    for actor in &mut world.actors {
        if let Some(motion) = actor.motion.as_mut() {
            motion.advance(&mut actor.state, dt);
        }
        if actor.class == ActorClass::Pylon {
            actor.state.speed = 0.0;
        }
        actor.state.lane = lane_of(&actor.state, &world.road);
    }

    world.tick += 1;
    world.time = cfg.time_of(world.tick);
    detect_collisions(world);
    Ok(())
}

/// Kinematic bicycle about the body centre, explicit Euler.
fn integrate_ego(ego: &mut VehicleState, long: f64, steer: f64, dt: f64, cfg: &SimConfig) {
    let accel = if long >= 0.0 {
        long * cfg.max_accel
    } else {
        long * cfg.max_decel
    };
    let delta = steer * cfg.max_steer_angle;
    let beta = math::atan(cfg.rear_axle_to_center / cfg.wheelbase * math::tan(delta));
    let v = ego.speed;
    let course = ego.heading + beta;
    ego.position.s += v * math::cos(course) * dt;
    ego.position.d += v * math::sin(course) * dt;
    ego.heading = math::wrap_angle(ego.heading + v / cfg.rear_axle_to_center * math::sin(beta) * dt);
    ego.speed = (v + accel * dt).clamp(0.0, cfg.max_speed);
}

fn detect_collisions(world: &mut WorldState) {
    let ego_rect = world.ego_footprint();
    let mut touching = Vec::new();
    for actor in &world.actors {
        if ego_rect.overlaps(&actor.footprint()) {
            touching.push(actor.id);
            if !world.contacts.contains(&actor.id) {
                world.collisions.push(CollisionRecord {
                    tick: world.tick,
                    time: world.time,
                    ego_position: world.ego.position,
                    other_actor: actor.id,
                });
            }
        }
    }
    world.contacts = touching;
}
