use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    LaneChange, LeaderSpec, OnsetRule, RiskEvent, RiskKind, ScenarioConfig, ScenarioError,
    ScenarioScript, SpawnSpec, Variant, REQUIRED_INTERSECTIONS,
};
use crate::geometry::Vec2;
use crate::sim::{
    ActorClass, ActorId, EventId, Intersection, LanePosition, MotionScript, RoadNetwork,
    SimConfig, VehicleState, WorldState,
};

/// Margin added around each event's stretch of road when checking overlap.
const WINDOW_MARGIN: f64 = 20.0;
/// How far past the road end scripted paths extend.
const PATH_OVERRUN: f64 = 1000.0;

fn validate(cfg: &ScenarioConfig) -> Result<(), ScenarioError> {
    if cfg.intersection_count < REQUIRED_INTERSECTIONS {
        return Err(ScenarioError::TooFewIntersections {
            configured: cfg.intersection_count,
        });
    }
    if !(cfg.total_length > 0.0 && cfg.lane_width > 0.0) {
        return Err(ScenarioError::InvalidConfig("road dimensions must be positive"));
    }
    if cfg.lanes_after_drop < 2 || cfg.lanes_before_drop != cfg.lanes_after_drop + 1 {
        return Err(ScenarioError::InvalidConfig(
            "the road must lose exactly one lane and keep at least two",
        ));
    }
    if !(cfg.lane_drop_fraction > 0.0 && cfg.lane_drop_fraction < 1.0) {
        return Err(ScenarioError::InvalidConfig("lane_drop_fraction must be in (0, 1)"));
    }
    let l = &cfg.leader;
    if !(l.speed > 0.0 && l.initial_gap > 0.0 && l.lane_change_duration > 0.0) {
        return Err(ScenarioError::InvalidConfig("leader parameters must be positive"));
    }
    let e = &cfg.entry;
    if !(e.accel > 0.0 && e.cruise_speed > 0.0 && e.stop_decel > 0.0) {
        return Err(ScenarioError::InvalidConfig("entry car dynamics must be positive"));
    }
    if cfg.pylons.lane_closure_count < 2 || cfg.pylons.row_count < 2 || cfg.pylons.spacing <= 0.0 {
        return Err(ScenarioError::InvalidConfig("pylon layout is degenerate"));
    }
    if cfg.max_placement_retries == 0 {
        return Err(ScenarioError::InvalidConfig("max_placement_retries must be at least 1"));
    }
    if !(cfg.run_tail >= 0.0 && cfg.despawn_distance > 0.0 && cfg.practice_duration > 0.0) {
        return Err(ScenarioError::InvalidConfig("timing parameters must be positive"));
    }
    Ok(())
}

/// Straight road with evenly spaced side-road intersections on the left and
/// a lane drop at `lane_drop_fraction` of its length.
pub fn build_road(cfg: &ScenarioConfig) -> Result<RoadNetwork, ScenarioError> {
    validate(cfg)?;
    let spacing = intersection_spacing(cfg);
    let intersections = (1..=cfg.intersection_count)
        .map(|k| Intersection {
            s: f64::from(k) * spacing,
            side_road_width: cfg.side_road_width,
        })
        .collect();
    Ok(RoadNetwork {
        total_length: cfg.total_length,
        lane_width: cfg.lane_width,
        lanes_before_drop: cfg.lanes_before_drop,
        lanes_after_drop: cfg.lanes_after_drop,
        lane_drop_s: cfg.total_length * cfg.lane_drop_fraction,
        intersections,
        ego_lane_before_drop: cfg.lanes_before_drop - 1,
        ego_lane_after_drop: cfg.lanes_after_drop - 1,
    })
}

fn intersection_spacing(cfg: &ScenarioConfig) -> f64 {
    cfg.total_length / f64::from(cfg.intersection_count + 1)
}

/// Straight sections halfway between consecutive intersections.
fn mid_slots(cfg: &ScenarioConfig) -> Vec<f64> {
    let spacing = intersection_spacing(cfg);
    (0..=cfg.intersection_count)
        .map(|k| (f64::from(k) + 0.5) * spacing)
        .collect()
}

fn ego_lane_center(road: &RoadNetwork, s: f64) -> f64 {
    road.lane_center(road.ego_lane(s), s)
        .unwrap_or(1.5 * road.lane_width)
}

/// Centre-to-centre distance from the ego to the leader at the start.
fn leader_offset(cfg: &ScenarioConfig, sim: &SimConfig) -> f64 {
    0.5 * sim.ego_extent.length
        + cfg.leader.initial_gap
        + 0.5 * ActorClass::Car.default_extent().length
}

fn plan_event(
    kind: RiskKind,
    anchor: f64,
    road: &RoadNetwork,
    cfg: &ScenarioConfig,
    sim: &SimConfig,
) -> RiskEvent {
    let car = ActorClass::Car.default_extent();
    let w = road.lane_width;
    match kind {
        RiskKind::PotentialEntry => {
            let e = &cfg.entry;
            let edge = road.left_edge(anchor);
            let target = road.lane_center(1, anchor).unwrap_or(edge - 0.5 * w);
            let start_d = edge + e.potential_setback + 0.5 * car.length;
            let turn_d = target + 0.75;
            let trigger_s = anchor - e.potential_trigger_distance;
            RiskEvent {
                id: EventId(0),
                kind,
                trigger_s,
                anchor_s: anchor,
                spawn: SpawnSpec::EnteringCar {
                    path: vec![
                        Vec2::new(anchor, start_d),
                        Vec2::new(anchor, turn_d),
                        Vec2::new(anchor + e.merge_length, target),
                        Vec2::new(road.total_length + PATH_OVERRUN, target),
                    ],
                    accel: e.accel,
                    cruise_speed: e.cruise_speed,
                    stop_decel: None,
                },
                onset_rule: OnsetRule::MotionStart,
                window: (trigger_s - WINDOW_MARGIN, anchor + 2.0 * WINDOW_MARGIN),
            }
        }
        RiskKind::ApparentEntry => {
            let e = &cfg.entry;
            let edge = road.left_edge(anchor);
            let start_d = edge + e.apparent_setback + 0.5 * car.length;
            let trigger_s = anchor - e.apparent_trigger_distance;
            RiskEvent {
                id: EventId(0),
                kind,
                trigger_s,
                anchor_s: anchor,
                spawn: SpawnSpec::EnteringCar {
                    path: vec![
                        Vec2::new(anchor, start_d),
                        Vec2::new(anchor, ego_lane_center(road, anchor)),
                    ],
                    accel: e.accel,
                    cruise_speed: e.cruise_speed,
                    stop_decel: Some(e.stop_decel),
                },
                onset_rule: OnsetRule::MotionStart,
                window: (trigger_s - WINDOW_MARGIN, anchor + 2.0 * WINDOW_MARGIN),
            }
        }
        RiskKind::PotentialPylons => {
            let p = &cfg.pylons;
            let n = p.lane_closure_count as usize;
            let length = (n - 1) as f64 * p.spacing;
            let first = anchor - 0.5 * length;
            let (right, left) = road.lane_bounds(1, anchor).unwrap_or((2.0 * w, 3.0 * w));
            let half = 0.5 * ActorClass::Pylon.default_extent().width;
            let outer = left - half - 0.1;
            let inner = right + p.clearance;
            let taper = (n / 2).max(2);
            let positions = (0..n)
                .map(|i| {
                    let f = (i as f64 / (taper - 1) as f64).min(1.0);
                    Vec2::new(first + i as f64 * p.spacing, outer - (outer - inner) * f)
                })
                .collect();
            let trigger_s = first - p.placement_distance;
            RiskEvent {
                id: EventId(0),
                kind,
                trigger_s,
                anchor_s: anchor,
                spawn: SpawnSpec::Pylons {
                    positions,
                    after_leader_s: None,
                },
                onset_rule: OnsetRule::FirstVisible,
                window: (trigger_s - WINDOW_MARGIN, first + length + WINDOW_MARGIN),
            }
        }
        RiskKind::PotentialMotorcycle => {
            let m = &cfg.motorcycle;
            let trigger_s = anchor - m.trigger_distance;
            let lane = road.ego_lane(anchor) + 1;
            let lane_d = road.lane_center(lane, anchor).unwrap_or(0.5 * w);
            RiskEvent {
                id: EventId(0),
                kind,
                trigger_s,
                anchor_s: anchor,
                spawn: SpawnSpec::Motorcycle {
                    behind: m.spawn_behind,
                    lane_d,
                    speed: m.speed,
                },
                onset_rule: OnsetRule::FirstVisible,
                window: (trigger_s - WINDOW_MARGIN, anchor + 150.0),
            }
        }
        RiskKind::ApparentPylons => {
            let p = &cfg.pylons;
            let l = &cfg.leader;
            let (right, left) = road
                .lane_bounds(road.ego_lane(anchor), anchor)
                .unwrap_or((w, 2.0 * w));
            let inset = 0.35;
            let rows = p.row_count as usize;
            let step = (left - right - 2.0 * inset) / (rows - 1) as f64;
            let center = ego_lane_center(road, anchor);
            let mut positions: Vec<Vec2> = (0..rows)
                .map(|j| Vec2::new(anchor, right + inset + j as f64 * step))
                .collect();
            positions.extend(
                (1..=p.tail_count).map(|t| Vec2::new(anchor + f64::from(t) * p.spacing, center)),
            );
            let lc_start = anchor - l.lane_change_lead;
            let lc_end = lc_start + l.speed * l.lane_change_duration;
            let trigger_s = lc_start - leader_offset(cfg, sim) - WINDOW_MARGIN;
            let tail_end = anchor + f64::from(p.tail_count) * p.spacing;
            RiskEvent {
                id: EventId(0),
                kind,
                trigger_s,
                anchor_s: anchor,
                spawn: SpawnSpec::Pylons {
                    positions,
                    after_leader_s: Some(lc_end),
                },
                onset_rule: OnsetRule::FirstVisible,
                window: (trigger_s - WINDOW_MARGIN, tail_end + WINDOW_MARGIN),
            }
        }
    }
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> Option<T> {
    if items.is_empty() {
        None
    } else {
        Some(items[rng.random_range(0..items.len())])
    }
}

fn place_potential(
    rng: &mut ChaCha8Rng,
    road: &RoadNetwork,
    cfg: &ScenarioConfig,
    sim: &SimConfig,
) -> Result<Vec<RiskEvent>, ScenarioError> {
    let mut kinds = Vec::new();
    for kind in RiskKind::POTENTIAL {
        for _ in 0..cfg.potential_counts.of(kind) {
            kinds.push(kind);
        }
    }
    let lo = cfg.ego_start_s;
    let hi = road.lane_drop_s - WINDOW_MARGIN;
    let intersections: Vec<f64> = road.intersections.iter().map(|i| i.s).collect();
    let mids = mid_slots(cfg);

    for _ in 0..cfg.max_placement_retries {
        for i in (1..kinds.len()).rev() {
            let j = rng.random_range(0..=i);
            kinds.swap(i, j);
        }
        let mut placed: Vec<RiskEvent> = Vec::with_capacity(kinds.len());
        let mut ok = true;
        for &kind in &kinds {
            let slots = if kind == RiskKind::PotentialEntry {
                &intersections
            } else {
                &mids
            };
            let candidates: Vec<RiskEvent> = slots
                .iter()
                .map(|&s| plan_event(kind, s, road, cfg, sim))
                .filter(|e| e.window.0 >= lo && e.window.1 <= hi)
                .filter(|e| placed.iter().all(|p| !overlaps(p.window, e.window)))
                .collect();
            if candidates.is_empty() {
                ok = false;
                break;
            }
            let idx = rng.random_range(0..candidates.len());
            placed.push(candidates[idx].clone());
        }
        if ok {
            return Ok(placed);
        }
    }
    Err(ScenarioError::PlacementFailed {
        attempts: cfg.max_placement_retries,
    })
}

fn apparent_candidates(
    kind: RiskKind,
    road: &RoadNetwork,
    cfg: &ScenarioConfig,
    sim: &SimConfig,
) -> Vec<f64> {
    let slots: Vec<f64> = if kind == RiskKind::ApparentEntry {
        road.intersections.iter().map(|i| i.s).collect()
    } else {
        mid_slots(cfg)
    };
    slots
        .into_iter()
        .filter(|&s| {
            let e = plan_event(kind, s, road, cfg, sim);
            e.trigger_s >= road.lane_drop_s && s <= road.total_length - cfg.end_exclusion
        })
        .collect()
}

fn leader_spec(
    road: &RoadNetwork,
    cfg: &ScenarioConfig,
    sim: &SimConfig,
    apparent: Option<&RiskEvent>,
) -> LeaderSpec {
    let ego_d = ego_lane_center(road, cfg.ego_start_s);
    let lane_change = apparent
        .filter(|e| e.kind == RiskKind::ApparentPylons)
        .map(|e| {
            let s = e.anchor_s;
            let target = road.lane_center(road.ego_lane(s) + 1, s).unwrap_or(0.5 * road.lane_width);
            LaneChange {
                start_s: s - cfg.leader.lane_change_lead,
                duration: cfg.leader.lane_change_duration,
                target_d: target,
            }
        });
    LeaderSpec {
        start: Vec2::new(cfg.ego_start_s + leader_offset(cfg, sim), ego_d),
        speed: cfg.leader.speed,
        lane_change,
    }
}

fn finish(
    variant: Option<Variant>,
    seed: u64,
    road: RoadNetwork,
    cfg: &ScenarioConfig,
    sim: &SimConfig,
    mut events: Vec<RiskEvent>,
    duration_limit: Option<f64>,
) -> ScenarioScript {
    events.sort_by(|a, b| a.trigger_s.total_cmp(&b.trigger_s));
    for (i, e) in events.iter_mut().enumerate() {
        e.id = EventId(i as u32 + 1);
    }
    let leader = leader_spec(&road, cfg, sim, events.iter().find(|e| e.kind.is_apparent()));
    ScenarioScript {
        variant,
        seed,
        ego_start: Vec2::new(cfg.ego_start_s, ego_lane_center(&road, cfg.ego_start_s)),
        ego_speed: cfg.leader.speed,
        road,
        leader,
        events,
        duration_limit,
    }
}

/// Places every risk event for one drive. The potential risks depend only on
/// `seed`; the apparent risk depends on the variant as well.
pub fn compile_scenario(
    variant: Variant,
    seed: u64,
    cfg: &ScenarioConfig,
    sim: &SimConfig,
) -> Result<ScenarioScript, ScenarioError> {
    let road = build_road(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = place_potential(&mut rng, &road, cfg, sim)?;

    let kind = variant.apparent_kind();
    let candidates = apparent_candidates(kind, &road, cfg, sim);
    let anchor = pick(&mut rng, &candidates).ok_or(ScenarioError::InvalidConfig(
        "no position in the narrowed section can host the apparent risk",
    ))?;
    events.push(plan_event(kind, anchor, &road, cfg, sim));
    Ok(finish(Some(variant), seed, road, cfg, sim, events, None))
}

/// The risk-free familiarisation drive.
pub fn practice_script(cfg: &ScenarioConfig, sim: &SimConfig) -> Result<ScenarioScript, ScenarioError> {
    let road = build_road(cfg)?;
    Ok(finish(
        None,
        0,
        road,
        cfg,
        sim,
        Vec::new(),
        Some(cfg.practice_duration),
    ))
}

pub(crate) fn leader_motion(spec: &LeaderSpec, road: &RoadNetwork) -> MotionScript {
    let end = road.total_length + PATH_OVERRUN;
    let path = match spec.lane_change {
        Some(lc) => vec![
            spec.start,
            Vec2::new(lc.start_s, spec.start.d),
            Vec2::new(lc.start_s + spec.speed * lc.duration, lc.target_d),
            Vec2::new(end, lc.target_d),
        ],
        None => vec![spec.start, Vec2::new(end, spec.start.d)],
    };
    MotionScript::new(path, 0.0, spec.speed, None)
}

/// World at tick 0: the ego at its start position and the leader ahead.
pub fn initial_world(script: &ScenarioScript, sim: &SimConfig) -> (WorldState, ActorId) {
    let ego = VehicleState {
        position: script.ego_start,
        heading: 0.0,
        speed: script.ego_speed,
        lane: LanePosition::OffRoad,
    };
    let mut world = WorldState::new(script.road.clone(), ego, sim.ego_extent);
    let leader_state = VehicleState {
        position: script.leader.start,
        heading: 0.0,
        speed: script.leader.speed,
        lane: LanePosition::OffRoad,
    };
    let leader = world.spawn(
        ActorClass::Car,
        leader_state,
        ActorClass::Car.default_extent(),
        Some(leader_motion(&script.leader, &script.road)),
        None,
    );
    (world, leader)
}
