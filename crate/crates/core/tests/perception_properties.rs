mod common;

use l2hmi_core::geometry::Vec2;
use l2hmi_core::perception::{
    detection_frame, project_box, visible_actors, CameraModel, PerceptionConfig,
};
use l2hmi_core::scenario::{build_road, ScenarioConfig, Variant};
use l2hmi_core::sim::{ActorClass, LanePosition, SimConfig, VehicleState, WorldState};
use l2hmi_core::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state(s: f64, d: f64, heading: f64) -> VehicleState {
    VehicleState {
        position: Vec2::new(s, d),
        heading,
        speed: 0.0,
        lane: LanePosition::OffRoad,
    }
}

fn empty_world() -> WorldState {
    let road = build_road(&ScenarioConfig::default()).unwrap();
    WorldState::new(road, state(500.0, 5.25, 0.0), ActorClass::Car.default_extent())
}

#[test]
fn whitelist_holds_over_random_placements() {
    let cfg = PerceptionConfig::default();
    let sim = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut detected = 0usize;
    for _ in 0..10_000 {
        let mut w = empty_world();
        w.ego.heading = rng.random_range(-0.2..0.2);
        for _ in 0..rng.random_range(1..6) {
            let class = ActorClass::ALL[rng.random_range(0..ActorClass::ALL.len())];
            let s = 500.0 + rng.random_range(-20.0..130.0);
            let d = rng.random_range(-2.0..14.0);
            let heading = rng.random_range(-1.6..1.6);
            w.spawn(class, state(s, d, heading), class.default_extent(), None, None);
        }
        for det in detection_frame(&w, &cfg, &sim) {
            assert!(det.class.is_vehicle(), "{:?}", det.class);
            detected += 1;
        }
    }
    assert!(detected > 1000);
}

#[test]
fn whitelist_holds_over_scenario_runs() {
    let cfg = Config::default();
    for seed in 0..3 {
        for v in [Variant::I, Variant::Ii] {
            let log = common::run(&cfg, common::scenario_drive(&cfg, v, seed, true), None);
            let n: usize = log.frames.iter().map(|f| f.detections.len()).sum();
            assert!(n > 0);
            assert!(log
                .frames
                .iter()
                .flat_map(|f| &f.detections)
                .all(|d| d.class.is_vehicle()));
        }
    }
}

#[test]
fn box_shrinks_with_distance() {
    let cam = CameraModel::default();
    let mut prev = f64::INFINITY;
    for k in 0..100 {
        let mut w = empty_world();
        let s = 510.0 + f64::from(k);
        w.spawn(ActorClass::Car, state(s, 5.25, 0.0), ActorClass::Car.default_extent(), None, None);
        let b = project_box(&w.actors[0], &w.ego, &cam).unwrap();
        assert!(b.height() < prev);
        prev = b.height();
    }
}

#[test]
fn lateral_motion_moves_box_monotonically() {
    let cam = CameraModel::default();
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let mut w = empty_world();
        let d = -3.0 + 0.4 * f64::from(k);
        w.spawn(ActorClass::Car, state(540.0, d, 0.0), ActorClass::Car.default_extent(), None, None);
        let Some(b) = project_box(&w.actors[0], &w.ego, &cam) else {
            continue;
        };
        let x = b.center().0;
        assert!(x < prev, "d {d}");
        prev = x;
    }
}

#[test]
fn adding_an_occluder_only_removes_detections() {
    let cfg = PerceptionConfig::default();
    let sim = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let mut w = empty_world();
        for _ in 0..4 {
            let class = ActorClass::ALL[rng.random_range(0..3)];
            let s = 500.0 + rng.random_range(10.0..110.0);
            w.spawn(class, state(s, rng.random_range(0.0..10.5), 0.0), class.default_extent(), None, None);
        }
        let before: Vec<_> = detection_frame(&w, &cfg, &sim).into_iter().map(|d| d.actor_id).collect();
        let class = ActorClass::ALL[rng.random_range(0..ActorClass::ALL.len())];
        let s = 500.0 + rng.random_range(5.0..60.0);
        let id = w.spawn(class, state(s, rng.random_range(0.0..10.5), 0.0), class.default_extent(), None, None);
        let after: Vec<_> = detection_frame(&w, &cfg, &sim)
            .into_iter()
            .map(|d| d.actor_id)
            .filter(|a| *a != id)
            .collect();
        assert!(after.iter().all(|a| before.contains(a)));
    }
}

#[test]
fn cadence_over_two_seconds() {
    let cfg = Config::default();
    let mut d = common::scenario_drive(&cfg, Variant::I, 0, true);
    let mut frames = Vec::new();
    for _ in 0..120 {
        let r = d
            .tick(|_| {
                l2hmi_core::automation::ControlCommand::idle(
                    l2hmi_core::automation::CommandSource::Driver,
                )
            })
            .unwrap();
        frames.extend(r.detections);
    }
    assert_eq!(frames.len(), 30);
    for (k, f) in frames.iter().enumerate() {
        assert_eq!(f.tick, 4 * k as u64);
        assert!((f.time - k as f64 / 15.0).abs() < 1e-12);
    }
}

#[test]
fn frame_count_matches_drive_length() {
    let cfg = Config::default();
    let log = common::run(&cfg, common::scenario_drive(&cfg, Variant::Ii, 4, true), None);
    let duration = log.ticks as f64 / 60.0;
    let expected = (duration * 15.0).floor();
    assert!((log.frames.len() as f64 - expected).abs() <= 1.0);
    let none = common::run(&cfg, common::scenario_drive(&cfg, Variant::Ii, 4, false), None);
    assert!(none.frames.is_empty());
}

#[test]
fn leader_is_seen_at_start() {
    let cfg = Config::default();
    let d = common::scenario_drive(&cfg, Variant::I, 0, true);
    let vis = visible_actors(d.world(), &cfg.perception.camera);
    assert_eq!(vis.len(), 1);
    assert_eq!(vis[0].class, ActorClass::Car);
}
