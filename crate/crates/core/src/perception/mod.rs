//! Ground-truth recognition overlay.
//!
//! A pinhole camera mounted on the ego projects every actor's 3D box into the
//! image. Actors are reported only if their class is on the whitelist, they
//! lie in the frustum and within range, and no nearer actor hides most of
//! their box. The overlay runs on a fixed sub-multiple of the tick rate.

mod camera;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use camera::{BoundingBox, CameraModel, ProjectedActor};

use crate::sim::{Actor, ActorClass, ActorId, SimConfig, VehicleState, WorldState};

/// Set of actor classes the recogniser reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassWhitelist {
    pub recognized: Vec<ActorClass>,
}

impl Default for ClassWhitelist {
    fn default() -> Self {
        Self {
            recognized: alloc::vec![ActorClass::Car, ActorClass::Bus, ActorClass::Truck],
        }
    }
}

impl ClassWhitelist {
    pub fn contains(&self, class: ActorClass) -> bool {
        self.recognized.contains(&class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    pub camera: CameraModel,
    pub whitelist: ClassWhitelist,
    /// Fraction of a box covered by a nearer box above which it is dropped.
    pub occlusion_threshold: f64,
    /// Optional per-class recall below 1.0; empty means perfect recall.
    pub recall: Vec<(ActorClass, f64)>,
    pub recall_seed: u64,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            whitelist: ClassWhitelist::default(),
            occlusion_threshold: 0.8,
            recall: Vec::new(),
            recall_seed: 0,
        }
    }
}

impl PerceptionConfig {
    fn recall_for(&self, class: ActorClass) -> f64 {
        self.recall
            .iter()
            .find(|(c, _)| *c == class)
            .map_or(1.0, |(_, r)| *r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub actor_id: ActorId,
    pub class: ActorClass,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub frame_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub tick: u64,
    pub time: f64,
    pub detections: Vec<Detection>,
}

/// Projects `actor` into the ego camera. `None` when nothing of it is in view.
pub fn project_box(actor: &Actor, ego: &VehicleState, camera: &CameraModel) -> Option<BoundingBox> {
    camera.project_actor(actor, ego).map(|p| p.bbox)
}

/// Actors in the frustum and within range, nearest first.
pub fn visible_actors(world: &WorldState, camera: &CameraModel) -> Vec<ProjectedActor> {
    let mut out: Vec<ProjectedActor> = world
        .actors
        .iter()
        .filter(|a| camera.range_to(&a.state, &world.ego) <= camera.max_range)
        .filter_map(|a| camera.project_actor(a, &world.ego))
        .collect();
    out.sort_by(|x, y| x.depth.total_cmp(&y.depth).then(x.id.cmp(&y.id)));
    out
}

/// Fraction of `target`'s box covered by the single nearer box that hides
/// the most of it.
pub fn occluded_fraction(target: &ProjectedActor, others: &[ProjectedActor]) -> f64 {
    let area = target.bbox.area();
    if area <= 0.0 {
        return 1.0;
    }
    others
        .iter()
        .filter(|o| o.id != target.id && o.depth < target.depth)
        .map(|o| target.bbox.intersection_area(&o.bbox) / area)
        .fold(0.0, f64::max)
}

/// Recognition results for the world as it stands on a perception tick.
pub fn detection_frame(
    world: &WorldState,
    perception: &PerceptionConfig,
    sim: &SimConfig,
) -> Vec<Detection> {
    let visible = visible_actors(world, &perception.camera);
    let frame_time = sim.time_of(world.tick);
    let mut out: Vec<Detection> = visible
        .iter()
        .filter(|p| perception.whitelist.contains(p.class))
        .filter(|p| occluded_fraction(p, &visible) < perception.occlusion_threshold)
        .filter(|p| recalled(perception, p.class, p.id, world.tick))
        .map(|p| Detection {
            actor_id: p.id,
            class: p.class,
            bbox: p.bbox,
            frame_time,
        })
        .collect();
    out.sort_by_key(|d| d.actor_id);
    out
}

fn recalled(cfg: &PerceptionConfig, class: ActorClass, id: ActorId, tick: u64) -> bool {
    let recall = cfg.recall_for(class);
    if recall >= 1.0 {
        return true;
    }
    let h = splitmix64(cfg.recall_seed ^ (u64::from(id.0) << 32) ^ tick);
    ((h >> 11) as f64 / (1u64 << 53) as f64) < recall
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Emits detection frames on the perception cadence when the HMI is on.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayStream {
    enabled: bool,
    divisor: u64,
    frames_emitted: u64,
}

impl OverlayStream {
    pub fn new(enabled: bool, sim: &SimConfig) -> Self {
        Self {
            enabled,
            divisor: u64::from(sim.detection_divisor),
            frames_emitted: 0,
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn frames_emitted(&self) -> u64 {
        self.frames_emitted
    }

    pub fn is_frame_tick(&self, tick: u64) -> bool {
        tick.is_multiple_of(self.divisor)
    }

    /// The frame for `world`'s tick, or `None` off-cadence or with the HMI off.
    pub fn frame(
        &mut self,
        world: &WorldState,
        perception: &PerceptionConfig,
        sim: &SimConfig,
    ) -> Option<DetectionFrame> {
        if !self.enabled || !self.is_frame_tick(world.tick) {
            return None;
        }
        self.frames_emitted += 1;
        Some(DetectionFrame {
            tick: world.tick,
            time: sim.time_of(world.tick),
            detections: detection_frame(world, perception, sim),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkingKind {
    RoadEdge,
    LaneLine,
    SideRoadEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marking {
    pub kind: MarkingKind,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorGeometry {
    pub id: ActorId,
    pub class: ActorClass,
    /// Convex outline of the projected body, image pixels.
    pub outline: Vec<[f64; 2]>,
    pub depth: f64,
}

/// Screen-space scene for the driver view, drawn with the perception camera
/// so overlay boxes line up with the drawn actors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub actors: Vec<ActorGeometry>,
    pub markings: Vec<Marking>,
}

/// Spacing of the sample points along projected road markings, metres.
const MARKING_STEP: f64 = 4.0;

pub fn frame_geometry(world: &WorldState, camera: &CameraModel) -> FrameGeometry {
    let mut actors: Vec<ActorGeometry> = visible_actors(world, camera)
        .into_iter()
        .map(|p| ActorGeometry {
            id: p.id,
            class: p.class,
            outline: p.outline,
            depth: p.depth,
        })
        .collect();
    // Painter's order: far to near.
    actors.reverse();

    let road = &world.road;
    let ego = &world.ego;
    let start = ego.position.s;
    let end = (start + camera.max_range).min(road.total_length);
    let mut markings = Vec::new();
    let boundary_count = road.lanes_before_drop.max(road.lanes_after_drop);
    for k in 0..=boundary_count {
        let d = f64::from(k) * road.lane_width;
        let mut points = Vec::new();
        let mut s = start;
        while s <= end {
            if f64::from(k) <= f64::from(road.lane_count(s)) {
                if let Some(p) = camera.project_ground(ego, s, d) {
                    points.push(p);
                }
            }
            s += MARKING_STEP;
        }
        if points.len() >= 2 {
            let kind = if k == 0 {
                MarkingKind::RoadEdge
            } else {
                MarkingKind::LaneLine
            };
            markings.push(Marking { kind, points });
        }
    }
    // Left edge follows the lane drop.
    let mut edge = Vec::new();
    let mut s = start;
    while s <= end {
        if let Some(p) = camera.project_ground(ego, s, road.left_edge(s)) {
            edge.push(p);
        }
        s += MARKING_STEP;
    }
    if edge.len() >= 2 {
        markings.push(Marking {
            kind: MarkingKind::RoadEdge,
            points: edge,
        });
    }
    for i in road
        .intersections
        .iter()
        .filter(|i| i.s >= start && i.s <= end)
    {
        let edge_d = road.left_edge(i.s);
        for side in [-0.5, 0.5] {
            let s_side = i.s + side * i.side_road_width;
            let points: Vec<[f64; 2]> = (0..8)
                .filter_map(|k| camera.project_ground(ego, s_side, edge_d + f64::from(k) * 4.0))
                .collect();
            if points.len() >= 2 {
                markings.push(Marking {
                    kind: MarkingKind::SideRoadEdge,
                    points,
                });
            }
        }
    }
    FrameGeometry { actors, markings }
}

#[cfg(test)]
mod tests;
