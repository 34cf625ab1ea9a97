use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::road::LanePosition;
use crate::geometry::{OrientedRect, Vec2};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(pub u32);

/// Identifies a scripted risk event within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorClass {
    Car,
    Bus,
    Truck,
    Motorcycle,
    Pylon,
}

impl ActorClass {
    pub const ALL: [ActorClass; 5] = [
        ActorClass::Car,
        ActorClass::Bus,
        ActorClass::Truck,
        ActorClass::Motorcycle,
        ActorClass::Pylon,
    ];

    /// Classes ACC treats as a vehicle to follow.
    pub fn is_vehicle(self) -> bool {
        matches!(self, ActorClass::Car | ActorClass::Bus | ActorClass::Truck)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActorClass::Car => "car",
            ActorClass::Bus => "bus",
            ActorClass::Truck => "truck",
            ActorClass::Motorcycle => "motorcycle",
            ActorClass::Pylon => "pylon",
        }
    }

    /// Typical body dimensions used when a script does not override them.
    pub fn default_extent(self) -> Extent {
        match self {
            ActorClass::Car => Extent::new(1.8, 4.5, 1.5),
            ActorClass::Bus => Extent::new(2.5, 11.0, 3.2),
            ActorClass::Truck => Extent::new(2.5, 8.0, 3.0),
            ActorClass::Motorcycle => Extent::new(0.8, 2.2, 1.4),
            ActorClass::Pylon => Extent::new(0.4, 0.4, 0.7),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub width: f64,
    pub length: f64,
    pub height: f64,
}

impl Extent {
    pub const fn new(width: f64, length: f64, height: f64) -> Self {
        Self {
            width,
            length,
            height,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.width, self.length, self.height]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Centre of the body in the road frame.
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub lane: LanePosition,
}

impl VehicleState {
    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.heading.is_finite() && self.speed.is_finite()
    }

    /// Velocity component along the road.
    pub fn speed_along_road(&self) -> f64 {
        self.speed * math::cos(self.heading)
    }

    pub fn footprint(&self, extent: &Extent) -> OrientedRect {
        OrientedRect::new(self.position, self.heading, extent.length, extent.width)
    }
}

/// Scripted trajectory: a polyline followed with a simple speed profile.
///
/// The actor accelerates at `accel` up to `cruise_speed`. With `stop_decel`
/// set it brakes so that it comes to rest exactly at the final waypoint;
/// otherwise it keeps going along the direction of the last segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionScript {
    pub path: Vec<Vec2>,
    pub accel: f64,
    pub cruise_speed: f64,
    pub stop_decel: Option<f64>,
    /// Arc length travelled along `path`.
    pub progress: f64,
}

impl MotionScript {
    pub fn new(path: Vec<Vec2>, accel: f64, cruise_speed: f64, stop_decel: Option<f64>) -> Self {
        debug_assert!(path.len() >= 2, "a motion path needs at least two waypoints");
        Self {
            path,
            accel,
            cruise_speed,
            stop_decel,
            progress: 0.0,
        }
    }

    pub fn path_length(&self) -> f64 {
        self.path.windows(2).map(|w| (w[1] - w[0]).length()).sum()
    }

    pub fn finished(&self) -> bool {
        self.stop_decel.is_some() && self.progress >= self.path_length()
    }

    /// Position and heading at arc length `at`.
    pub fn sample(&self, at: f64) -> (Vec2, f64) {
        let mut remaining = at.max(0.0);
        let last = self.path.len() - 1;
        for (i, w) in self.path.windows(2).enumerate() {
            let seg = w[1] - w[0];
            let len = seg.length();
            if remaining <= len || i + 1 == last {
                let heading = math::atan2(seg.d, seg.s);
                let t = if len > 0.0 { remaining / len } else { 0.0 };
                return (w[0] + seg * t, heading);
            }
            remaining -= len;
        }
        (self.path[0], 0.0)
    }

    /// Advances one tick and writes the new pose into `state`.
    pub fn advance(&mut self, state: &mut VehicleState, dt: f64) {
        let total = self.path_length();
        let mut v = (state.speed + self.accel * dt).min(self.cruise_speed);
        if let Some(decel) = self.stop_decel {
            let remaining = (total - self.progress).max(0.0);
            v = v.min(math::sqrt(2.0 * decel * remaining));
        }
        v = v.max(0.0);
        self.progress += v * dt;
        if self.stop_decel.is_some() && self.progress >= total {
            self.progress = total;
            v = 0.0;
        }
        let (position, heading) = self.sample(self.progress);
        state.position = position;
        state.heading = heading;
        state.speed = v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub id: ActorId,
    pub class: ActorClass,
    pub state: VehicleState,
    pub extent: Extent,
    pub motion: Option<MotionScript>,
    /// Risk event that spawned this actor, if any.
    pub event: Option<EventId>,
}

impl Actor {
    pub fn footprint(&self) -> OrientedRect {
        self.state.footprint(&self.extent)
    }
}
