use alloc::vec;

use super::*;
use crate::geometry::Vec2;
use crate::sim::{Extent, LanePosition, RoadNetwork};

fn road() -> RoadNetwork {
    RoadNetwork {
        total_length: 8400.0,
        lane_width: 3.5,
        lanes_before_drop: 3,
        lanes_after_drop: 2,
        lane_drop_s: 6300.0,
        intersections: vec![],
        ego_lane_before_drop: 2,
        ego_lane_after_drop: 1,
    }
}

fn state(s: f64, d: f64) -> VehicleState {
    VehicleState {
        position: Vec2::new(s, d),
        heading: 0.0,
        speed: 0.0,
        lane: LanePosition::OffRoad,
    }
}

const EGO_S: f64 = 100.0;
const EGO_D: f64 = 5.25;

fn world() -> WorldState {
    WorldState::new(road(), state(EGO_S, EGO_D), ActorClass::Car.default_extent())
}

fn put(w: &mut WorldState, class: ActorClass, s: f64, d: f64) -> ActorId {
    w.spawn(class, state(s, d), class.default_extent(), None, None)
}

/// Centre `s` of an actor of `length` whose near face is `range` ahead of the camera.
fn near_face_at(range: f64, length: f64) -> f64 {
    EGO_S + CameraModel::default().mount_forward + range + 0.5 * length
}

fn detect(w: &WorldState) -> Vec<Detection> {
    detection_frame(w, &PerceptionConfig::default(), &SimConfig::default())
}

#[test]
fn car_twenty_metres_ahead_is_detected() {
    let mut w = world();
    let id = put(&mut w, ActorClass::Car, near_face_at(20.0, 4.5), EGO_D);
    let dets = detect(&w);
    assert_eq!(dets.len(), 1);
    assert_eq!(dets[0].actor_id, id);
    assert_eq!(dets[0].class, ActorClass::Car);
}

#[test]
fn car_width_in_pixels_follows_pinhole() {
    let mut w = world();
    put(&mut w, ActorClass::Car, near_face_at(20.0, 4.5), EGO_D);
    let dets = detect(&w);
    // 1000 px focal length times 1.8 m over 20 m.
    assert!((dets[0].bbox.width() - 90.0).abs() < 1e-9);
}

#[test]
fn pylon_row_is_never_detected() {
    let mut w = world();
    for i in 0..5 {
        put(&mut w, ActorClass::Pylon, EGO_S + 30.0, 3.85 + 0.7 * f64::from(i));
    }
    assert!(detect(&w).is_empty());
    assert_eq!(visible_actors(&w, &PerceptionConfig::default().camera).len(), 5);
}

#[test]
fn motorcycle_is_never_detected() {
    let mut w = world();
    put(&mut w, ActorClass::Motorcycle, EGO_S + 25.0, 1.75);
    assert!(detect(&w).is_empty());
}

#[test]
fn empty_scene_gives_empty_frame() {
    assert!(detect(&world()).is_empty());
}

#[test]
fn actor_on_optical_axis_projects_to_principal_point() {
    let cam = CameraModel::default();
    let mut w = world();
    let s = EGO_S + 40.0;
    let extent = Extent::new(1.8, 4.5, 2.0 * cam.mount_height);
    w.spawn(ActorClass::Car, state(s, EGO_D), extent, None, None);
    let b = project_box(&w.actors[0], &w.ego, &cam).unwrap();
    let (cx, cy) = b.center();
    assert!((cx - 640.0).abs() < 1e-9);
    assert!((cy - 512.0).abs() < 1e-9);
}

#[test]
fn actor_behind_ego_is_not_visible() {
    let mut w = world();
    put(&mut w, ActorClass::Car, EGO_S - 20.0, EGO_D);
    assert!(visible_actors(&w, &CameraModel::default()).is_empty());
}

#[test]
fn actor_beyond_range_is_not_visible() {
    let mut w = world();
    put(&mut w, ActorClass::Car, EGO_S + 200.0, EGO_D);
    assert!(detect(&w).is_empty());
}

#[test]
fn leftward_actor_appears_left_of_centre() {
    let mut w = world();
    put(&mut w, ActorClass::Car, EGO_S + 30.0, EGO_D + 3.5);
    let dets = detect(&w);
    assert!(dets[0].bbox.center().0 < 640.0);
}

#[test]
fn fully_hidden_car_is_dropped() {
    let mut w = world();
    let near = put(&mut w, ActorClass::Truck, EGO_S + 15.0, EGO_D);
    put(&mut w, ActorClass::Car, EGO_S + 40.0, EGO_D);
    let dets = detect(&w);
    assert_eq!(dets.len(), 1);
    assert_eq!(dets[0].actor_id, near);
}

#[test]
fn partially_hidden_car_is_kept() {
    let mut w = world();
    put(&mut w, ActorClass::Car, EGO_S + 20.0, EGO_D);
    put(&mut w, ActorClass::Car, EGO_S + 40.0, EGO_D + 3.0);
    assert_eq!(detect(&w).len(), 2);
}

#[test]
fn occluded_fraction_ignores_farther_boxes() {
    let mut w = world();
    put(&mut w, ActorClass::Car, EGO_S + 20.0, EGO_D);
    put(&mut w, ActorClass::Truck, EGO_S + 50.0, EGO_D);
    let vis = visible_actors(&w, &CameraModel::default());
    assert_eq!(occluded_fraction(&vis[0], &vis), 0.0);
    assert!(occluded_fraction(&vis[1], &vis) > 0.0);
}

#[test]
fn detections_sorted_by_actor_id() {
    let mut w = world();
    put(&mut w, ActorClass::Car, EGO_S + 60.0, EGO_D - 3.5);
    put(&mut w, ActorClass::Bus, EGO_S + 30.0, EGO_D + 3.5);
    put(&mut w, ActorClass::Car, EGO_S + 20.0, EGO_D);
    let ids: Vec<u32> = detect(&w).iter().map(|d| d.actor_id.0).collect();
    assert_eq!(ids, vec![1, 2, 3]);
}

#[test]
fn custom_whitelist_admits_pylons() {
    let mut w = world();
    put(&mut w, ActorClass::Pylon, EGO_S + 30.0, EGO_D);
    let cfg = PerceptionConfig {
        whitelist: ClassWhitelist {
            recognized: vec![ActorClass::Pylon],
        },
        ..PerceptionConfig::default()
    };
    assert_eq!(detection_frame(&w, &cfg, &SimConfig::default()).len(), 1);
}

#[test]
fn zero_recall_drops_everything() {
    let mut w = world();
    put(&mut w, ActorClass::Car, EGO_S + 30.0, EGO_D);
    let cfg = PerceptionConfig {
        recall: vec![(ActorClass::Car, 0.0)],
        ..PerceptionConfig::default()
    };
    assert!(detection_frame(&w, &cfg, &SimConfig::default()).is_empty());
}

#[test]
fn frame_time_matches_tick() {
    let mut w = world();
    w.tick = 120;
    put(&mut w, ActorClass::Car, EGO_S + 30.0, EGO_D);
    assert_eq!(detect(&w)[0].frame_time, 2.0);
}

#[test]
fn overlay_runs_every_fourth_tick() {
    let sim = SimConfig::default();
    let cfg = PerceptionConfig::default();
    let mut stream = OverlayStream::new(true, &sim);
    let mut w = world();
    let mut ticks = Vec::new();
    for t in 0..120 {
        w.tick = t;
        if let Some(f) = stream.frame(&w, &cfg, &sim) {
            ticks.push(f.tick);
        }
    }
    assert_eq!(stream.frames_emitted(), 30);
    assert!(ticks.iter().all(|t| t % 4 == 0));
}

#[test]
fn overlay_disabled_emits_nothing() {
    let sim = SimConfig::default();
    let mut stream = OverlayStream::new(false, &sim);
    let w = world();
    assert!(stream.frame(&w, &PerceptionConfig::default(), &sim).is_none());
    assert_eq!(stream.frames_emitted(), 0);
}

#[test]
fn frame_geometry_paints_far_to_near() {
    let mut w = world();
    put(&mut w, ActorClass::Car, EGO_S + 20.0, EGO_D);
    put(&mut w, ActorClass::Pylon, EGO_S + 60.0, EGO_D + 3.5);
    let g = frame_geometry(&w, &CameraModel::default());
    assert_eq!(g.actors.len(), 2);
    assert!(g.actors[0].depth > g.actors[1].depth);
    assert!(g.markings.iter().any(|m| m.kind == MarkingKind::LaneLine));
}

#[test]
fn box_clipped_to_image() {
    let mut w = world();
    put(&mut w, ActorClass::Bus, EGO_S + 6.0, EGO_D + 3.5);
    let cam = CameraModel::default();
    for p in visible_actors(&w, &cam) {
        assert!(p.bbox.x_min >= 0.0 && p.bbox.x_max <= 1280.0);
        assert!(p.bbox.y_min >= 0.0 && p.bbox.y_max <= 1024.0);
    }
}
